//! Every numerical threshold used by the library and the verification suites.
//!
//! Defaults are the desk-scale values the suites are calibrated against. The
//! CLI exposes each field as `--tol-<field-with-dashes>`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    // kernel
    /// LU pivot threshold relative to `max|A_ij|`.
    pub pivot_rel: f64,
    /// Polynomial trailing-coefficient trim, relative to `max|coeff|`.
    pub trim_rel: f64,
    /// Aberth stopping threshold on the update, relative to the root scale.
    pub root_rel: f64,
    pub root_max_iter: usize,
    /// Switch from `det·A⁻¹` to cofactors when `|det| <= adj_det_rel·max|A|ⁿ`.
    pub adj_det_rel: f64,
    /// Minimum node separation for interpolation, relative to node scale.
    pub node_gap_rel: f64,

    // model
    /// Minimum separation of the `λ_j^m` (relative to their scale).
    pub distinct_rel: f64,
    /// Spin constraint and moment-map residual.
    pub constraint: f64,
    /// Equality test in the regularity scan.
    pub regular_eq: f64,

    // spectral functions
    pub det_rel: f64,
    pub resolvent_identity: f64,
    pub resolvent_lu: f64,
    pub structure_rel: f64,

    // canonical coordinates
    pub phi_rel: f64,
    pub theta_rel: f64,
    pub gauge_fn_rel: f64,
    pub gauge_recover: f64,
    pub roundtrip: f64,
    pub spectrum_gap: f64,

    // brackets
    pub fd_step: f64,
    pub bracket: f64,
    pub antisymmetry: f64,
    pub partial_symmetry: f64,
    pub cross_derivative: f64,
    pub partial_rel: f64,

    // dynamics
    pub hamiltonian_rel: f64,
    pub conservation_rel: f64,
    pub crosscheck: f64,
    pub collision_gap: f64,

    // curves
    pub divisibility_rel: f64,
    pub incidence: f64,
    pub equivariance: f64,
    pub two_route: f64,
    pub quotient_curve: f64,
    pub quotient_surface: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            pivot_rel: 1e-13,
            trim_rel: 1e-12,
            root_rel: 1e-13,
            root_max_iter: 500,
            adj_det_rel: 1e-10,
            node_gap_rel: 1e-10,

            distinct_rel: 1e-9,
            constraint: 1e-10,
            regular_eq: 1e-10,

            det_rel: 1e-9,
            resolvent_identity: 1e-10,
            resolvent_lu: 1e-9,
            structure_rel: 1e-8,

            phi_rel: 1e-8,
            theta_rel: 1e-8,
            gauge_fn_rel: 1e-7,
            gauge_recover: 1e-6,
            roundtrip: 1e-7,
            spectrum_gap: 1e-8,

            fd_step: 1e-6,
            bracket: 1e-5,
            antisymmetry: 1e-9,
            partial_symmetry: 1e-6,
            cross_derivative: 1e-7,
            partial_rel: 1e-5,

            hamiltonian_rel: 1e-9,
            conservation_rel: 1e-8,
            crosscheck: 1e-6,
            collision_gap: 1e-6,

            divisibility_rel: 1e-8,
            incidence: 1e-8,
            equivariance: 1e-9,
            two_route: 1e-8,
            quotient_curve: 1e-9,
            quotient_surface: 1e-12,
        }
    }
}

impl Tolerances {
    /// Overrides a field by its snake_case name. Returns false for unknown names.
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        let mut json = serde_json::to_value(&*self).expect("tolerances serialize");
        let key = name.replace('-', "_");
        let Some(slot) = json.get_mut(&key) else {
            return false;
        };
        *slot = if slot.is_u64() {
            serde_json::json!(value as u64)
        } else {
            serde_json::json!(value)
        };
        match serde_json::from_value(json) {
            Ok(t) => {
                *self = t;
                true
            }
            Err(_) => false,
        }
    }

    pub fn names() -> Vec<String> {
        let json = serde_json::to_value(Tolerances::default()).expect("tolerances serialize");
        json.as_object()
            .map(|o| o.keys().cloned().collect())
            .unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_by_name() {
        let mut t = Tolerances::default();
        assert!(t.set("det-rel", 1e-6));
        assert_eq!(t.det_rel, 1e-6);
        assert!(t.set("root_max_iter", 20.0));
        assert_eq!(t.root_max_iter, 20);
        assert!(!t.set("nope", 1.0));
    }

    #[test]
    fn names_cover_fields() {
        let names = Tolerances::names();
        assert!(names.contains(&"bracket".to_string()));
        assert!(names.len() > 30);
    }
}
