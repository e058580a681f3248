use afdm::channel::{apply_channel, effective_matrix, effective_matrix_closed_form, LtvChannel, PathEntry};
use afdm::io::{format_metadata, parse_metadata};
use afdm::waveform::{demodulate, modulate_with, Constellation};
use afdm::{ChirpConfig, Daft};
use num_complex::Complex;
use proptest::prelude::*;

type C = Complex<f64>;

fn vec_strategy(n: usize) -> impl Strategy<Value = Vec<C>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| C::new(a, b)), n)
}

fn sized_vec() -> impl Strategy<Value = (usize, Vec<C>)> {
    (2usize..48).prop_flat_map(|n| (Just(n), vec_strategy(n)))
}

fn energy(x: &[C]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip((n, x) in sized_vec(), c1 in 0.0..1.0f64, c2 in 0.0..1.0f64) {
        let plan = Daft::<f64>::new(&ChirpConfig::new(n, c1, c2, 1.0, 0).unwrap());
        let y = plan.daft(&plan.idaft(&x).unwrap()).unwrap();
        for (a, b) in y.iter().zip(&x) {
            prop_assert!((a - b).norm() < 1e-11);
        }
    }

    #[test]
    fn energy_preserved((n, x) in sized_vec(), c1 in -1.0..1.0f64, c2 in -1.0..1.0f64) {
        let plan = Daft::<f64>::new(&ChirpConfig::new(n, c1, c2, 1.0, 0).unwrap());
        let e = energy(&x);
        prop_assert!((energy(&plan.idaft(&x).unwrap()) - e).abs() <= 1e-11 * e.max(1.0));
        prop_assert!((energy(&plan.daft(&x).unwrap()) - e).abs() <= 1e-11 * e.max(1.0));
    }

    #[test]
    fn transform_is_linear((n, x) in sized_vec(), c1 in 0.0..1.0f64, a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let plan = Daft::<f64>::new(&ChirpConfig::new(n, c1, 0.3, 1.0, 0).unwrap());
        let y: Vec<C> = x.iter().rev().cloned().collect();
        let mix: Vec<C> = x.iter().zip(&y).map(|(p, q)| p * a + q * C::new(0.0, b)).collect();
        let (tx, ty, tm) = (plan.idaft(&x).unwrap(), plan.idaft(&y).unwrap(), plan.idaft(&mix).unwrap());
        for i in 0..n {
            prop_assert!((tm[i] - (tx[i] * a + ty[i] * C::new(0.0, b))).norm() < 1e-10);
        }
    }

    #[test]
    fn single_precision_tracks_double((n, x) in sized_vec(), c1 in 0.0..1.0f64, c2 in 0.0..1.0f64) {
        let cfg = ChirpConfig::new(n, c1, c2, 1.0, 0).unwrap();
        let d = Daft::<f64>::new(&cfg).idaft(&x).unwrap();
        let xs: Vec<Complex<f32>> = x.iter().map(|v| Complex::new(v.re as f32, v.im as f32)).collect();
        let s = Daft::<f32>::new(&cfg).idaft(&xs).unwrap();
        for (a, b) in s.iter().zip(&d) {
            prop_assert!(((a.re as f64 - b.re).powi(2) + (a.im as f64 - b.im).powi(2)).sqrt() < 1e-4);
        }
    }

    /// One integer path moves DAFT index m to m + α − 2N·c1·l (mod N) with a
    /// unit-magnitude coefficient.
    #[test]
    fn integer_path_shift_law(n in prop::sample::select(vec![8usize, 12, 16, 32]), k in 0i64..6, l in 0usize..4, alpha in -3i64..=3, c2 in 0.0..1.0f64) {
        let cfg = ChirpConfig::with_integer_c1(n, k, c2, 1.0, 4).unwrap();
        let ch = LtvChannel::new(vec![PathEntry::new(C::new(1.0, 0.0), l as f64, alpha as f64 / n as f64)]).unwrap();
        let h = effective_matrix(&ch, &cfg).unwrap();
        let shift = (alpha - k * l as i64).rem_euclid(n as i64) as usize;
        for m in 0..n {
            let row = (m + shift) % n;
            prop_assert!((h[(row, m)].norm() - 1.0).abs() < 1e-9);
        }
        prop_assert!(h.max_abs_diff(&effective_matrix_closed_form(&ch, &cfg).unwrap()) < 1e-9);
    }

    /// Modulate, pass through the channel and demodulate equals the
    /// effective matrix applied to the symbols.
    #[test]
    fn effective_matrix_matches_pipeline(x in vec_strategy(16), l in 0usize..3, alpha in -2i64..=2, g in 0.0..6.28f64) {
        let cfg = ChirpConfig::with_integer_c1(16, 5, 0.1, 1.0, 3).unwrap();
        let plan = Daft::<f64>::new(&cfg);
        let ch = LtvChannel::new(vec![
            PathEntry::new(C::from_polar(0.8, g), l as f64, alpha as f64 / 16.0),
            PathEntry::new(C::new(0.0, 0.5), 0.0, 0.0),
        ]).unwrap();
        let rx = apply_channel(&modulate_with(&plan, &x).unwrap(), &ch).unwrap();
        let y = demodulate(&plan, &rx, 0).unwrap();
        let expect = effective_matrix(&ch, &cfg).unwrap().mul_vec(&x).unwrap();
        for (a, b) in y.iter().zip(&expect) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn constellation_bits_round_trip(bits in prop::collection::vec(0u8..2, 0..64), which in 0usize..3) {
        let c = [Constellation::Bpsk, Constellation::Qpsk, Constellation::Qam16][which];
        let b = c.bits_per_symbol();
        let bits = &bits[..bits.len() / b * b];
        let x = c.map_bits::<f64>(bits).unwrap();
        prop_assert_eq!(c.demap(&x), bits.to_vec());
    }

    #[test]
    fn metadata_round_trip(entries in prop::collection::btree_map("[a-z_][a-z0-9_]{0,10}", "[ -~]{0,20}", 0..8)) {
        let meta: Vec<(String, String)> = entries.into_iter().map(|(k, v)| (k, v.trim().to_string())).collect();
        prop_assert_eq!(parse_metadata(&format_metadata(&meta)).unwrap(), meta);
    }
}
