//! Explicit soliton models from the local classification.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::metric::{build_metric, parse_named, FiberSpec, SolitonSpec, SpecError, DEFAULT_DOMAIN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogKind {
    /// Flat space in polar form over a round sphere, `f = (rho/2) s^2`.
    Gaussian,
    /// Line times an Einstein manifold with constant `rho`.
    EinsteinProduct,
    /// `ds^2 + s^2 dS^r + g_N` with `N` Einstein of constant `rho`.
    TypeII,
    /// Steady `ds^2 + s^{2(n-3)/(n-1)} dt^2 + s^{4/(n-1)} g_N` with `N` Ricci flat.
    TypeIII,
    /// Flat cone over the round sphere with constant potential.
    RoundCone,
    /// User-supplied spec file; has no built-in entry.
    Custom,
}

impl CatalogKind {
    pub const BUILT_IN: [CatalogKind; 5] = [
        CatalogKind::Gaussian,
        CatalogKind::EinsteinProduct,
        CatalogKind::TypeII,
        CatalogKind::TypeIII,
        CatalogKind::RoundCone,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CatalogKind::Gaussian => "gaussian",
            CatalogKind::EinsteinProduct => "einstein_product",
            CatalogKind::TypeII => "type_ii",
            CatalogKind::TypeIII => "type_iii",
            CatalogKind::RoundCone => "round_cone",
            CatalogKind::Custom => "custom",
        }
    }
}

impl fmt::Display for CatalogKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CatalogKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::BUILT_IN
            .iter()
            .chain(std::iter::once(&CatalogKind::Custom))
            .find(|k| k.name() == s)
            .copied()
            .ok_or_else(|| format!("unknown catalog entry `{s}`"))
    }
}

/// Catalog entry plus its parameter table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogId {
    pub kind: CatalogKind,
    pub n: usize,
    /// Sphere dimension of the Euclidean factor for `type_ii`.
    pub r: usize,
    pub rho: f64,
}

impl CatalogId {
    pub fn new(kind: CatalogKind, n: usize, r: usize, rho: f64) -> Self {
        CatalogId { kind, n, r, rho }
    }

    pub fn gaussian(n: usize, rho: f64) -> Self {
        Self::new(CatalogKind::Gaussian, n, n - 1, rho)
    }

    pub fn einstein_product(n: usize, rho: f64) -> Self {
        Self::new(CatalogKind::EinsteinProduct, n, 0, rho)
    }

    pub fn type_ii(n: usize, r: usize, rho: f64) -> Self {
        Self::new(CatalogKind::TypeII, n, r, rho)
    }

    pub fn type_iii(n: usize) -> Self {
        Self::new(CatalogKind::TypeIII, n, 1, 0.0)
    }

    pub fn round_cone(n: usize) -> Self {
        Self::new(CatalogKind::RoundCone, n, n - 1, 0.0)
    }
}

fn constraint(msg: impl Into<String>) -> SpecError {
    SpecError::Constraint(msg.into())
}

fn quadratic_potential(rho: f64) -> String {
    format!("({rho:?}/2)*s^2")
}

/// Builds and validates the spec for a built-in catalog entry.
pub fn catalog_entry(id: CatalogId) -> Result<SolitonSpec, SpecError> {
    let CatalogId { kind, n, r, rho } = id;
    if n < 4 {
        return Err(constraint(format!("n ≥ 4 required, got n = {n}")));
    }
    if !rho.is_finite() {
        return Err(constraint("rho must be finite"));
    }
    let (fibers, warps, potential): (Vec<FiberSpec>, Vec<String>, String) = match kind {
        CatalogKind::Gaussian => {
            if rho == 0.0 {
                return Err(constraint("gaussian requires rho ≠ 0"));
            }
            (
                vec![FiberSpec::new(n - 1, 1.0, true)],
                vec!["s".into()],
                quadratic_potential(rho),
            )
        }
        CatalogKind::EinsteinProduct => {
            let k = rho / (n as f64 - 2.0);
            let f = if rho == 0.0 {
                "0".to_string()
            } else {
                quadratic_potential(rho)
            };
            (vec![FiberSpec::new(n - 1, k, true)], vec!["1".into()], f)
        }
        CatalogKind::TypeII => {
            if rho == 0.0 {
                return Err(constraint("type_ii requires rho ≠ 0"));
            }
            // The Einstein factor has dimension n - r - 1 and must carry a
            // nonzero Einstein constant, so it needs dimension at least 2.
            if r < 1 || r + 3 > n {
                return Err(constraint(format!(
                    "type_ii requires 1 ≤ r ≤ n - 3, got r = {r}, n = {n}"
                )));
            }
            let sphere_k = if r == 1 { 0.0 } else { 1.0 };
            let einstein_dim = n - r - 1;
            let k2 = rho / (einstein_dim as f64 - 1.0);
            (
                vec![
                    FiberSpec::new(r, sphere_k, true),
                    FiberSpec::new(einstein_dim, k2, true),
                ],
                vec!["s".into(), "1".into()],
                quadratic_potential(rho),
            )
        }
        CatalogKind::TypeIII => {
            if n == 5 {
                return Err(constraint("type_iii requires n≠5"));
            }
            if rho != 0.0 {
                return Err(constraint("type_iii is steady and forces rho = 0"));
            }
            (
                vec![FiberSpec::new(1, 0.0, true), FiberSpec::new(n - 2, 0.0, true)],
                vec![format!("s^({}/{})", n - 3, n - 1), format!("s^(2/{})", n - 1)],
                format!("({}/{})*log(s)", 2 * (n - 3), n - 1),
            )
        }
        CatalogKind::RoundCone => {
            if rho != 0.0 {
                return Err(constraint("round_cone is steady and forces rho = 0"));
            }
            (vec![FiberSpec::new(n - 1, 1.0, true)], vec!["s".into()], "0".into())
        }
        CatalogKind::Custom => {
            return Err(constraint("custom entries come from a spec file"));
        }
    };
    let warps = warps
        .iter()
        .enumerate()
        .map(|(j, w)| parse_named(&format!("warp {}", j + 1), w))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = SolitonSpec {
        n,
        rho,
        domain: DEFAULT_DOMAIN,
        fibers,
        warps,
        potential: parse_named("potential", &potential)?,
    };
    build_metric(spec)
}
