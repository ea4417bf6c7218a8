//! Declarative description of a tight-binding model on a generated point
//! set, as read from experiment configs.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, ZERO};
use crate::magnetics::MagneticCocycle;
use crate::operators::{assemble_tightbinding, HoppingProfile, KernelOperator, LocalPattern, Onsite};
use crate::pointsets::{generate, norm, DeloneSet, Generator, Window};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HoppingSpec {
    /// Amplitude `t` between points at distance `spacing`.
    NearestNeighbour {
        #[serde(default = "minus_one")]
        t: f64,
        #[serde(default = "one")]
        spacing: f64,
    },
    /// `t exp(-decay (|s| - 1))` with a smooth cut-off between `cut_in` and `range`.
    Radial { t: f64, decay: f64, cut_in: f64, range: f64 },
    /// Two orbitals at nearest neighbours: `[[t, g (s1 - i s2)], [-g (s1 + i s2), -t]]`.
    TwoOrbital { t: f64, coupling: f64 },
}

fn minus_one() -> f64 {
    -1.0
}

fn one() -> f64 {
    1.0
}

impl HoppingSpec {
    pub fn profile(&self) -> HoppingProfile {
        match *self {
            HoppingSpec::NearestNeighbour { t, spacing } => HoppingProfile::nearest_neighbour(t, spacing),
            HoppingSpec::Radial { t, decay, cut_in, range } => HoppingProfile::radial(t, decay, cut_in, range),
            HoppingSpec::TwoOrbital { t, coupling } => HoppingProfile::new(1.01, 2, move |s| {
                if (norm(s) - 1.0).abs() > 0.01 {
                    return vec![ZERO; 4];
                }
                let (a, b) = (s[0], s.get(1).copied().unwrap_or(0.0));
                vec![
                    c64::new(t, 0.0),
                    c64::new(coupling * a, -coupling * b),
                    c64::new(-coupling * a, -coupling * b),
                    c64::new(-t, 0.0),
                ]
            }),
        }
    }

    pub fn orbitals(&self) -> usize {
        match self {
            HoppingSpec::TwoOrbital { .. } => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OnsiteSpec {
    /// Same energies, one per orbital, on every site.
    Constant { values: Vec<f64> },
    /// Energy `values[k mod len]` on sites whose first coordinate is `lo + k`.
    Stripe { values: Vec<f64> },
    /// `strength` times the number of neighbours within the pattern radius.
    Coordination { strength: f64 },
}

impl OnsiteSpec {
    pub fn onsite(&self, window: &Window) -> Onsite {
        match self {
            OnsiteSpec::Constant { values } => {
                let v = values.clone();
                Arc::new(move |_: &LocalPattern| v.clone())
            }
            OnsiteSpec::Stripe { values } => {
                let v = values.clone();
                let lo = window.lo[0];
                Arc::new(move |p: &LocalPattern| {
                    let k = (p.position[0] - lo).round() as i64;
                    vec![v[k.rem_euclid(v.len() as i64) as usize]]
                })
            }
            OnsiteSpec::Coordination { strength } => {
                let s = *strength;
                Arc::new(move |p: &LocalPattern| vec![s * p.neighbours.len() as f64])
            }
        }
    }
}

impl Default for OnsiteSpec {
    fn default() -> Self {
        OnsiteSpec::Constant { values: vec![0.0] }
    }
}

/// Tight-binding model: point set generator, hopping, onsite energies and
/// field. The field is either `flux` quanta per unit square (d = 2) or the
/// strict upper triangle of theta.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default = "default_lattice")]
    pub lattice: Generator,
    #[serde(default = "yes")]
    pub periodic: bool,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub hopping: HoppingSpec,
    #[serde(default)]
    pub onsite: OnsiteSpec,
    #[serde(default)]
    pub flux: Option<f64>,
    #[serde(default)]
    pub theta: Option<Vec<f64>>,
}

fn default_lattice() -> Generator {
    Generator::PeriodicSquare { spacing: 1.0 }
}

fn yes() -> bool {
    true
}

fn default_dim() -> usize {
    2
}

impl ModelSpec {
    /// Nearest-neighbour square lattice at `flux` quanta per plaquette.
    pub fn hofstadter(flux: f64) -> Self {
        Self {
            lattice: default_lattice(),
            periodic: true,
            dim: 2,
            hopping: HoppingSpec::NearestNeighbour { t: -1.0, spacing: 1.0 },
            onsite: OnsiteSpec::default(),
            flux: Some(flux),
            theta: None,
        }
    }

    /// Two-orbital insulator without field: orbital energies `+-mass`.
    pub fn two_orbital(t: f64, coupling: f64, mass: f64) -> Self {
        Self {
            hopping: HoppingSpec::TwoOrbital { t, coupling },
            onsite: OnsiteSpec::Constant { values: vec![mass, -mass] },
            flux: Some(0.0),
            ..Self::hofstadter(0.0)
        }
    }

    pub fn cocycle(&self) -> Result<MagneticCocycle> {
        match (&self.flux, &self.theta) {
            (Some(_), Some(_)) => Err(Error::Config { key: "model.flux".into(), message: "give either flux or theta, not both".into() }),
            (Some(f), None) => {
                if self.dim != 2 {
                    return Err(Error::Config { key: "model.flux".into(), message: "flux needs dim = 2; use theta".into() });
                }
                Ok(MagneticCocycle::flux(*f))
            }
            (None, Some(t)) => MagneticCocycle::from_upper(self.dim, t),
            (None, None) => Ok(MagneticCocycle::zero(self.dim)),
        }
    }

    /// Square window `[0, size]^d`.
    pub fn window(&self, size: f64) -> Window {
        Window::cube(self.dim, 0.0, size)
    }

    pub fn point_set(&self, size: f64, seed: u64) -> Result<DeloneSet> {
        generate(&self.lattice, &self.window(size), seed, self.periodic)
    }

    pub fn assemble_on(&self, set: &DeloneSet, c: &MagneticCocycle) -> Result<KernelOperator> {
        assemble_tightbinding(set, &self.hopping.profile(), c, &self.onsite.onsite(&set.window))
    }

    pub fn build(&self, size: f64, seed: u64) -> Result<(DeloneSet, KernelOperator)> {
        let set = self.point_set(size, seed)?;
        let h = self.assemble_on(&set, &self.cocycle()?)?;
        Ok((set, h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trips_through_toml() {
        let spec = ModelSpec::two_orbital(0.5, 0.35, 3.0);
        let text = toml::to_string(&spec).unwrap();
        let back: ModelSpec = toml::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn two_orbital_hopping_is_hermitian() {
        let (_, h) = ModelSpec::two_orbital(0.5, 0.35, 3.0).build(6.0, 0).unwrap();
        assert!(h.hermitian);
        assert_eq!(h.len(), 72);
    }

    #[test]
    fn flux_and_theta_are_exclusive() {
        let mut spec = ModelSpec::hofstadter(0.25);
        spec.theta = Some(vec![1.0]);
        assert!(matches!(spec.cocycle(), Err(Error::Config { .. })));
    }
}
