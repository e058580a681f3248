use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Role of one DAFT-domain index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Data,
    Pilot,
    /// Zero symbol isolating the local pilot from data.
    Guard,
    /// Zero symbol reserved for another user's pilot region.
    GuardBand,
}

/// Partition of `0..N` into data, pilot, guard and guard-band indices.
#[derive(Clone, Debug, PartialEq)]
pub struct GridLayout {
    roles: Vec<Role>,
    pilot_index: Option<usize>,
    pilot_amplitude: f64,
}

impl GridLayout {
    pub fn from_roles(roles: Vec<Role>, pilot_amplitude: f64) -> Result<Self> {
        let pilots: Vec<usize> = roles.iter().enumerate().filter(|(_, r)| **r == Role::Pilot).map(|(i, _)| i).collect();
        if pilots.len() > 1 {
            return Err(Error::InvalidLayout(format!("{} pilot indices, at most one allowed", pilots.len())));
        }
        if roles.len() < 2 {
            return Err(Error::InvalidLayout("layout needs at least two indices".into()));
        }
        Ok(Self { roles, pilot_index: pilots.first().copied(), pilot_amplitude })
    }

    /// Random-data symbol: every index carries data.
    pub fn all_data(n: usize) -> Self {
        Self { roles: vec![Role::Data; n], pilot_index: None, pilot_amplitude: 1.0 }
    }

    /// Deterministic point pilot; every other index is a guard.
    pub fn point_pilot(n: usize, pilot_index: usize, pilot_amplitude: f64) -> Result<Self> {
        Self::embedded_pilot(n, pilot_index, n, pilot_amplitude)
    }

    /// Pilot at `pilot_index` with `guard` zero symbols on each side
    /// (circularly), data elsewhere.
    pub fn embedded_pilot(n: usize, pilot_index: usize, guard: usize, pilot_amplitude: f64) -> Result<Self> {
        if pilot_index >= n {
            return Err(Error::IndexOutOfRange { index: pilot_index, len: n });
        }
        let mut roles = vec![Role::Data; n];
        let guard = guard.min(n.saturating_sub(1) / 2 + 1);
        for d in 1..=guard {
            roles[(pilot_index + d) % n] = Role::Guard;
            roles[(pilot_index + n - d % n) % n] = Role::Guard;
        }
        roles[pilot_index] = Role::Pilot;
        Self::from_roles(roles, pilot_amplitude)
    }

    /// Marks `center ± half_width` (circularly) as guard band. Fails if that
    /// region touches this layout's pilot or guards.
    pub fn with_guard_band(mut self, center: usize, half_width: usize) -> Result<Self> {
        let n = self.n();
        for d in -(half_width as i64)..=half_width as i64 {
            let i = (center as i64 + d).rem_euclid(n as i64) as usize;
            match self.roles[i] {
                Role::Data | Role::GuardBand => self.roles[i] = Role::GuardBand,
                r => return Err(Error::InvalidLayout(format!("guard band overlaps {r:?} at index {i}"))),
            }
        }
        Ok(self)
    }

    /// Guard width per side that keeps a pilot isolated from paths spanning
    /// the given delay and Doppler extents (in DAFT bins).
    pub fn default_guard_width(max_delay_bins: f64, max_doppler_bins: f64) -> usize {
        (max_delay_bins + max_doppler_bins).ceil().max(0.0) as usize
    }

    pub fn n(&self) -> usize {
        self.roles.len()
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn role(&self, i: usize) -> Role {
        self.roles[i]
    }

    pub fn pilot_index(&self) -> Option<usize> {
        self.pilot_index
    }

    pub fn pilot_amplitude(&self) -> f64 {
        self.pilot_amplitude
    }

    pub fn pilot_value<T: Real>(&self) -> Complex<T> {
        Complex::new(T::lit(self.pilot_amplitude), T::zero())
    }

    pub fn count(&self, role: Role) -> usize {
        self.roles.iter().filter(|r| **r == role).count()
    }

    pub fn data_indices(&self) -> Vec<usize> {
        self.indices(Role::Data)
    }

    pub fn indices(&self, role: Role) -> Vec<usize> {
        self.roles.iter().enumerate().filter(|(_, r)| **r == role).map(|(i, _)| i).collect()
    }
}

/// DAFT-domain symbol vector together with its layout.
#[derive(Clone, Debug, PartialEq)]
pub struct DaftGrid<T> {
    pub symbols: Vec<Complex<T>>,
    pub layout: GridLayout,
}

/// Places data in index order on DATA slots and the pilot on the PILOT slot;
/// guards and guard bands are exact zeros.
pub fn build_grid<T: Real>(layout: &GridLayout, data: &[Complex<T>], pilot: Complex<T>) -> Result<DaftGrid<T>> {
    let n_data = layout.count(Role::Data);
    if data.len() != n_data {
        return Err(Error::LengthMismatch { expected: n_data, actual: data.len() });
    }
    let zero = Complex::new(T::zero(), T::zero());
    let mut it = data.iter();
    let symbols = layout
        .roles
        .iter()
        .map(|r| match r {
            Role::Data => *it.next().expect("counted above"),
            Role::Pilot => pilot,
            Role::Guard | Role::GuardBand => zero,
        })
        .collect();
    Ok(DaftGrid { symbols, layout: layout.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    fn data(n: usize) -> Vec<C> {
        (0..n).map(|i| C::new(i as f64 + 1.0, -(i as f64))).collect()
    }

    #[test]
    fn all_data_grid_is_data() {
        let layout = GridLayout::all_data(8);
        let d = data(8);
        assert_eq!(build_grid(&layout, &d, C::new(0.0, 0.0)).unwrap().symbols, d);
    }

    #[test]
    fn point_pilot_grid() {
        let layout = GridLayout::point_pilot(16, 5, 1.0).unwrap();
        let g = build_grid(&layout, &[], C::new(2.0, 0.0)).unwrap();
        for (i, v) in g.symbols.iter().enumerate() {
            assert_eq!(*v, if i == 5 { C::new(2.0, 0.0) } else { C::new(0.0, 0.0) });
        }
    }

    #[test]
    fn hdrs_bookkeeping() {
        let layout = GridLayout::embedded_pilot(128, 64, 4, 1.0).unwrap();
        assert_eq!(layout.count(Role::Data), 119);
        assert_eq!(layout.count(Role::Guard), 8);
        assert_eq!(layout.count(Role::Pilot), 1);
        let g = build_grid(&layout, &data(119), C::new(1.0, 0.0)).unwrap();
        assert_eq!(g.symbols.iter().filter(|z| **z == C::new(0.0, 0.0)).count(), 8);
        for i in 60..=68 {
            assert_ne!(layout.role(i), Role::Data);
        }
        assert!(build_grid(&layout, &data(118), C::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn guards_wrap_circularly() {
        let layout = GridLayout::embedded_pilot(16, 0, 2, 1.0).unwrap();
        assert_eq!(layout.indices(Role::Guard), vec![1, 2, 14, 15]);
    }

    #[test]
    fn guard_band_cannot_hit_pilot() {
        let layout = GridLayout::embedded_pilot(32, 8, 3, 1.0).unwrap();
        assert!(layout.clone().with_guard_band(13, 2).is_err());
        let l2 = layout.with_guard_band(24, 3).unwrap();
        assert_eq!(l2.count(Role::GuardBand), 7);
        assert_eq!(l2.count(Role::Data), 32 - 7 - 7);
    }

    #[test]
    fn rejects_two_pilots() {
        let mut roles = vec![Role::Data; 8];
        roles[1] = Role::Pilot;
        roles[4] = Role::Pilot;
        assert!(GridLayout::from_roles(roles, 1.0).is_err());
    }

    #[test]
    fn default_guard_width_rounds_up() {
        assert_eq!(GridLayout::default_guard_width(2.0, 1.2), 4);
    }
}
