use serde::{Deserialize, Serialize};

use super::Branch;

/// Boltzmann constant, J/K.
pub const K_BOLTZMANN_J: f64 = 1.380649e-23;
/// Boltzmann constant, eV/K.
pub const K_BOLTZMANN_EV: f64 = 8.617333262e-5;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;

/// Material and operating-point constants.
///
/// Defaults describe a copper line at 373 K. None of them are fixed by the
/// model itself; every value can be overridden from a pipeline config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParams {
    /// Pre-exponential diffusion factor, m^2/s.
    pub d0: f64,
    /// Activation energy, eV.
    pub ea: f64,
    /// Effective bulk modulus, Pa.
    pub bulk_modulus: f64,
    /// Atomic volume, m^3.
    pub omega: f64,
    /// Temperature, K.
    pub temperature: f64,
    /// Effective valence Z*.
    pub z_star: f64,
    /// C
    pub e_charge: f64,
    /// Resistivity, Ohm m. Maps current density to field: E = rho j.
    pub resistivity: f64,
    /// Initial residual stress, Pa.
    pub sigma_t: f64,
    /// Metal thickness, um.
    pub t_metal: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            d0: 7.8e-5,
            ea: 0.86,
            bulk_modulus: 1e11,
            omega: 1.18e-29,
            temperature: 373.0,
            z_star: 10.0,
            e_charge: ELEMENTARY_CHARGE,
            resistivity: 2.25e-8,
            sigma_t: 0.0,
            t_metal: 0.2,
        }
    }
}

impl PhysicalParams {
    /// Names of out-of-range fields. Everything but `ea` (>= 0) and
    /// `sigma_t` (any finite value) must be strictly positive.
    pub fn invalid_fields(&self) -> Vec<&'static str> {
        let checks = [
            ("d0", self.d0),
            ("bulk_modulus", self.bulk_modulus),
            ("omega", self.omega),
            ("temperature", self.temperature),
            ("z_star", self.z_star),
            ("e_charge", self.e_charge),
            ("resistivity", self.resistivity),
            ("t_metal", self.t_metal),
        ];
        let mut bad: Vec<&'static str> =
            checks.iter().filter(|(_, v)| !(v.is_finite() && *v > 0.0)).map(|(n, _)| *n).collect();
        if !(self.ea.is_finite() && self.ea >= 0.0) {
            bad.push("ea");
        }
        if !self.sigma_t.is_finite() {
            bad.push("sigma_t");
        }
        bad
    }

    /// Effective charge q* = Z* e, C.
    pub fn q_star(&self) -> f64 {
        self.z_star * self.e_charge
    }
}

/// D_a = D0 exp(-Ea / kT), m^2/s.
pub fn atomic_diffusivity(params: &PhysicalParams) -> f64 {
    params.d0 * (-params.ea / (K_BOLTZMANN_EV * params.temperature)).exp()
}

/// kappa = D_a B Omega / (k_B T), m^2/s.
pub fn stress_diffusivity(d_a: f64, bulk_modulus: f64, omega: f64, temperature: f64) -> f64 {
    d_a * bulk_modulus * omega / (K_BOLTZMANN_J * temperature)
}

/// Stress diffusivity kappa for a parameter set, m^2/s.
pub fn diffusivity(params: &PhysicalParams) -> f64 {
    stress_diffusivity(atomic_diffusivity(params), params.bulk_modulus, params.omega, params.temperature)
}

/// EM driving force G = E q* / Omega for current density `j` (A/m^2), Pa/m.
pub fn driving_force_for(j: f64, params: &PhysicalParams) -> f64 {
    params.resistivity * j * params.q_star() / params.omega
}

/// EM driving force of a branch, Pa/m. Odd in the current density.
pub fn driving_force(branch: &Branch, params: &PhysicalParams) -> f64 {
    driving_force_for(branch.current_density, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn kappa_hand_value() {
        // 1e-16 * 1e11 * 1.18e-29 / (1.380649e-23 * 373)
        let k = stress_diffusivity(1e-16, 1e11, 1.18e-29, 373.0);
        assert!(rel(k, 2.291_342e-14) < 1e-6, "{k}");
    }

    #[test]
    fn kappa_is_linear_in_bulk_modulus() {
        let p = PhysicalParams::default();
        let q = PhysicalParams { bulk_modulus: 2.0 * p.bulk_modulus, ..p.clone() };
        assert!(rel(diffusivity(&q), 2.0 * diffusivity(&p)) < 1e-15);
    }

    #[test]
    fn zero_activation_energy_gives_d0() {
        let p = PhysicalParams { ea: 0.0, ..Default::default() };
        assert_eq!(atomic_diffusivity(&p), p.d0);
        assert!(p.invalid_fields().is_empty());
    }

    #[test]
    fn driving_force_hand_value() {
        let p = PhysicalParams { e_charge: 1.602e-19, ..Default::default() };
        // 2.25e-8 * 1e9 * 10 * 1.602e-19 / 1.18e-29
        let g = driving_force_for(1e9, &p);
        assert!(rel(g, 3.054_661e12) < 1e-6, "{g}");
        assert_eq!(driving_force_for(0.0, &p), 0.0);
        assert_eq!(driving_force_for(-1e9, &p), -g);
    }

    #[test]
    fn negative_temperature_is_reported() {
        let p = PhysicalParams { temperature: -1.0, sigma_t: -5e7, ..Default::default() };
        assert_eq!(p.invalid_fields(), vec!["temperature"]);
    }
}
