//! Built-in benchmark targets and a name-based registry.
//!
//! Three families are built in:
//!
//! - `test1` — a smooth single-variable peak on `[0,1]`,
//!   `f(x) = x (exp(-(x-1/3)²/k) - exp(-4/(9k)))`;
//! - `test2` — a Kellogg-type function `r^β μ(θ)` on `[-1,1]²` with a point
//!   singularity at the origin where interfaces intersect;
//! - `test3` — a sharp `tanh` transition layer around the circle `r = 1/2`
//!   on `[-1,1]²`.
//!
//! Registry names are case-sensitive; `kellogg` and `layer` are aliases for
//! `test2` and `test3`. Parameters omitted from the map take the benchmark
//! defaults listed per family.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;

use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use core::fmt;

use crate::error::{Error, Result};
use crate::math;
use crate::quadrature::Domain;

/// An evaluable scalar target with a human-readable name. Evaluation is
/// deterministic and reentrant.
pub struct TargetFn {
    name: String,
    f: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl TargetFn {
    pub fn new(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), f: Box::new(f) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

impl fmt::Debug for TargetFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetFn").field("name", &self.name).finish()
    }
}

/// Description of a target instance: family name, dimension, domain, and the
/// complete parameter map (defaults filled in).
#[derive(Debug, Clone)]
pub struct TargetSpec {
    pub name: String,
    pub dimension: usize,
    pub domain: Domain,
    pub parameters: BTreeMap<String, f64>,
}

/// A resolved target: its spec plus the evaluable function.
#[derive(Debug)]
pub struct BuiltTarget {
    pub spec: TargetSpec,
    pub f: TargetFn,
}

/// Smooth single-variable peak on `[0,1]`; `k` controls the peak width.
pub fn test1(k: f64) -> TargetFn {
    TargetFn::new("test1", move |x: &[f64]| {
        let t = x[0];
        t * (math::exp(-(t - 1.0 / 3.0) * (t - 1.0 / 3.0) / k) - math::exp(-4.0 / (9.0 * k)))
    })
}

/// Kellogg-type function `r^β μ(θ)` in polar coordinates at the origin.
///
/// The four-branch angular factor `μ` is taken verbatim from the benchmark
/// statement this family reproduces; its third branch carries a
/// `cos(θβ)` factor that makes `μ` discontinuous along the negative axes.
/// Passing `standard_third_branch = true` substitutes the classical
/// `cos(σβ)` coefficient, which makes `μ` continuous on the whole circle.
pub fn test2(beta: f64, sigma: f64, rho: f64, standard_third_branch: bool) -> TargetFn {
    TargetFn::new("test2", move |x: &[f64]| {
        kellogg_value(x[0], x[1], beta, sigma, rho, standard_third_branch)
    })
}

fn kellogg_value(x: f64, y: f64, beta: f64, sigma: f64, rho: f64, standard: bool) -> f64 {
    let r = math::hypot(x, y);
    if r == 0.0 {
        return 0.0;
    }
    let mut theta = math::atan2(y, x);
    if theta < 0.0 {
        theta += TAU;
    }
    let mu = if theta <= FRAC_PI_2 {
        math::cos((FRAC_PI_2 - sigma) * beta) * math::cos((theta - FRAC_PI_2 + rho) * beta)
    } else if theta <= PI {
        math::cos(rho * beta) * math::cos((theta - PI + sigma) * beta)
    } else if theta <= 1.5 * PI {
        let lead = if standard { math::cos(sigma * beta) } else { math::cos(theta * beta) };
        lead * math::cos((theta - PI - rho) * beta)
    } else {
        math::cos((FRAC_PI_2 - rho) * beta) * math::cos((theta - 1.5 * PI - sigma) * beta)
    };
    math::pow(r, beta) * mu
}

/// Transition layer around the circle `x² + y² = 1/4`, sharpened as
/// `eps_layer` shrinks.
pub fn test3(eps_layer: f64) -> TargetFn {
    TargetFn::new("test3", move |x: &[f64]| {
        math::tanh((x[0] * x[0] + x[1] * x[1] - 0.25) / eps_layer) - math::tanh(0.75 / eps_layer)
    })
}

/// Benchmark default for `test1`.
pub const TEST1_K: f64 = 0.01;
/// Benchmark defaults for `test2`.
pub const TEST2_BETA: f64 = 0.1;
pub const TEST2_SIGMA: f64 = -14.922_565_104_551_52;
pub const TEST2_RHO: f64 = FRAC_PI_4;
/// Benchmark default for `test3`.
pub const TEST3_EPS: f64 = 0.01;

type Builder = Box<dyn Fn(&BTreeMap<String, f64>) -> Result<BuiltTarget> + Send + Sync>;

/// Maps target names to constructors so run configurations can select a
/// target by name plus a parameter map. User-supplied targets can be added
/// with [`TargetRegistry::register`].
pub struct TargetRegistry {
    builders: BTreeMap<String, Builder>,
}

impl fmt::Debug for TargetRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetRegistry")
            .field("names", &self.names())
            .finish()
    }
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

impl TargetRegistry {
    pub fn with_builtins() -> Self {
        let mut reg = Self { builders: BTreeMap::new() };
        reg.register("test1", |params| {
            let k = param(params, "k", TEST1_K);
            if k <= 0.0 {
                return Err(Error::invalid("test1 parameter k must be positive"));
            }
            let mut full = BTreeMap::new();
            full.insert("k".to_string(), k);
            Ok(BuiltTarget {
                spec: TargetSpec {
                    name: "test1".to_string(),
                    dimension: 1,
                    domain: Domain::new(vec![0.0], vec![1.0])?,
                    parameters: full,
                },
                f: test1(k),
            })
        });
        let kellogg = |params: &BTreeMap<String, f64>| {
            let beta = param(params, "beta", TEST2_BETA);
            let sigma = param(params, "sigma", TEST2_SIGMA);
            let rho = param(params, "rho", TEST2_RHO);
            let standard = param(params, "kellogg_standard", 0.0) != 0.0;
            let mut full = BTreeMap::new();
            full.insert("beta".to_string(), beta);
            full.insert("sigma".to_string(), sigma);
            full.insert("rho".to_string(), rho);
            full.insert("kellogg_standard".to_string(), if standard { 1.0 } else { 0.0 });
            Ok(BuiltTarget {
                spec: TargetSpec {
                    name: "test2".to_string(),
                    dimension: 2,
                    domain: Domain::new(vec![-1.0, -1.0], vec![1.0, 1.0])?,
                    parameters: full,
                },
                f: test2(beta, sigma, rho, standard),
            })
        };
        reg.register("test2", kellogg);
        reg.register("kellogg", kellogg);
        let layer = |params: &BTreeMap<String, f64>| {
            let eps = param(params, "eps_layer", TEST3_EPS);
            if eps <= 0.0 {
                return Err(Error::invalid("test3 parameter eps_layer must be positive"));
            }
            let mut full = BTreeMap::new();
            full.insert("eps_layer".to_string(), eps);
            Ok(BuiltTarget {
                spec: TargetSpec {
                    name: "test3".to_string(),
                    dimension: 2,
                    domain: Domain::new(vec![-1.0, -1.0], vec![1.0, 1.0])?,
                    parameters: full,
                },
                f: test3(eps),
            })
        };
        reg.register("test3", layer);
        reg.register("layer", layer);
        reg
    }

    pub fn register(
        &mut self,
        name: impl Into<String>,
        builder: impl Fn(&BTreeMap<String, f64>) -> Result<BuiltTarget> + Send + Sync + 'static,
    ) {
        self.builders.insert(name.into(), Box::new(builder));
    }

    pub fn names(&self) -> alloc::vec::Vec<&str> {
        self.builders.keys().map(String::as_str).collect()
    }

    pub fn build(&self, name: &str, params: &BTreeMap<String, f64>) -> Result<BuiltTarget> {
        match self.builders.get(name) {
            Some(b) => b(params),
            None => Err(Error::UnknownTarget(format!(
                "{name} (known: {})",
                self.names().join(", ")
            ))),
        }
    }
}
