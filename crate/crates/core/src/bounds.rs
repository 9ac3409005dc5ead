//! Tail bounds on normalized volume ratios, the closed-form distortion
//! formulas, and union-bound certificates.
//!
//! For a Gaussian map and a subset of `s + 1` points, the squared volume
//! ratio is distributed as `∏_{i=1}^{s} χ²_{d-i+1}`. The normalized ratio
//! `r = (vol f(S) / vol S)^{1/s}` therefore satisfies `s·r² = s·(∏)^{1/s}`,
//! which is sandwiched between `χ²_t` and `χ²_l` with
//! `t = s(d-s+1)` and `l = t + (s-1)(s-2)/2`. Hence
//!
//! * `Pr[r ≤ a] ≤ Pr[χ²_t ≤ s·a²]`
//! * `Pr[r ≥ b] ≤ Pr[χ²_l ≥ s·b²]`
//!
//! Certificates evaluate these with exact chi-square CDFs. The looser closed
//! forms ([`contraction_tail_bound`], [`expansion_tail_bound`]) are kept as
//! separate functions.

use serde::{Deserialize, Serialize};

use crate::gamma::{chi_square_cdf, chi_square_sf, ln_binomial};
use crate::{Error, Result};

/// Default share of the failure budget given to contraction.
pub const DEFAULT_SPLIT: f64 = 0.5;
/// Relative precision of the threshold bisection.
pub const SEARCH_REL_TOL: f64 = 1e-3;
/// Upper end of the expansion-threshold search range.
pub const B_SEARCH_MAX: f64 = 1e3;

/// `s(d - s + 1)`.
pub fn t_param(s: u32, d: u32) -> u32 {
    assert!(1 <= s && s <= d, "need 1 <= s <= d, got s = {s}, d = {d}");
    s * (d - s + 1)
}

/// `s(d - s + 1) + (s - 1)(s - 2)/2`.
pub fn l_param(s: u32, d: u32) -> u32 {
    t_param(s, d) + (s - 1) * (s.saturating_sub(2)) / 2
}

/// `(e·s·a²)^{t/2} / (t (t-2)^{(t-1)/2})`, an upper bound on
/// `Pr[χ²_t ≤ s·a²]` with `t = s(d-s+1)`.
pub fn contraction_tail_bound(s: u32, d: u32, a: f64) -> Result<f64> {
    if s == 0 || s > d || d < 3 {
        return Err(Error::Domain(format!(
            "need 1 <= s <= d and d >= 3, got s = {s}, d = {d}"
        )));
    }
    if !(a > 0.0) {
        return Err(Error::Domain(format!("a must be positive, got {a}")));
    }
    let t = f64::from(t_param(s, d));
    if t <= 2.0 {
        return Err(Error::Domain(format!("bound needs t > 2, got t = {t}")));
    }
    let ln = 0.5 * t * (1.0 + f64::from(s).ln() + 2.0 * a.ln())
        - t.ln()
        - 0.5 * (t - 1.0) * (t - 2.0).ln();
    Ok(ln.exp())
}

/// `e^{-(s·b² - l)/2} (s·b²)^{l/2+1} / (l-2)^{(l-1)/2}`, an upper bound on
/// `Pr[χ²_l ≥ s·b²]`, valid when `s·b² > 2l + 4`.
pub fn expansion_tail_bound(s: u32, d: u32, b: f64) -> Result<f64> {
    if s == 0 || s > d {
        return Err(Error::Domain(format!(
            "need 1 <= s <= d, got s = {s}, d = {d}"
        )));
    }
    let l = f64::from(l_param(s, d));
    if l <= 2.0 {
        return Err(Error::Domain(format!("bound needs l > 2, got l = {l}")));
    }
    let x = f64::from(s) * b * b;
    if !(x > 2.0 * l + 4.0) {
        return Err(Error::Domain(format!(
            "bound needs s·b² > 2l + 4 = {}, got {x}",
            2.0 * l + 4.0
        )));
    }
    let ln = -0.5 * (x - l) + (0.5 * l + 1.0) * x.ln() - 0.5 * (l - 1.0) * (l - 2.0).ln();
    Ok(ln.exp())
}

/// `h_d(x) = (x + 1) / (x (d - x + 1))` on `[1, d]`.
pub fn exponent_h(d: u32, x: f64) -> Result<f64> {
    let df = f64::from(d);
    if !(1.0..=df).contains(&x) {
        return Err(Error::Domain(format!("x must lie in [1, {d}], got {x}")));
    }
    Ok((x + 1.0) / (x * (df - x + 1.0)))
}

/// `c · n^{2/d} · sqrt(ln n / d)`.
pub fn distance_distortion_bound(n: f64, d: u32, c: f64) -> f64 {
    let d = f64::from(d);
    c * n.powf(2.0 / d) * (n.ln() / d).sqrt()
}

/// `c · n^{2/d} · sqrt(ln n · ln ln n)`, defined for `n ≥ 16`.
pub fn volume_distortion_bound(n: f64, d: u32, c: f64) -> Result<f64> {
    if !(n >= 16.0) {
        return Err(Error::Domain(format!(
            "volume bound needs n >= 16, got {n}"
        )));
    }
    Ok(c * n.powf(2.0 / f64::from(d)) * (n.ln() * n.ln().ln()).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Distance,
    Volume,
}

/// Contraction threshold `a` and expansion threshold `b` for a problem size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub n: u64,
    pub d: u32,
    pub k: u32,
    pub a: f64,
    pub b: f64,
}

impl BoundParams {
    pub fn new(n: u64, d: u32, k: u32, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a < b) {
            return Err(Error::InvalidInput(format!(
                "need 0 < a < b, got a = {a}, b = {b}"
            )));
        }
        if d < 3 {
            return Err(Error::InvalidInput(format!("need d >= 3, got {d}")));
        }
        if k == 0 || u64::from(k) > n.saturating_sub(1) {
            return Err(Error::InvalidInput(format!(
                "need 1 <= k <= n - 1, got k = {k}, n = {n}"
            )));
        }
        Ok(Self { n, d, k, a, b })
    }

    /// `b / a`, the distortion the certificate guarantees after rescaling.
    pub fn ratio(&self) -> f64 {
        self.b / self.a
    }
}

/// A union bound below one: with probability at least `1 - failure_bound`
/// a Gaussian map keeps every normalized ratio inside `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub params: BoundParams,
    pub failure_bound: f64,
    pub contraction_mass: f64,
    pub expansion_mass: f64,
    pub mode: Mode,
}

/// Union-bound mass of contraction and expansion failures.
fn union_masses(mode: Mode, n: u64, d: u32, k: u32, a: f64, b: f64) -> (f64, f64) {
    match mode {
        Mode::Distance => {
            let pairs = ln_binomial(n, 2);
            let lo = chi_square_cdf(d, a * a).expect("valid arguments");
            let hi = chi_square_sf(d, b * b).expect("valid arguments");
            ((pairs + lo.ln()).exp(), (pairs + hi.ln()).exp())
        }
        Mode::Volume => (1..=k).fold((0.0, 0.0), |(lo_acc, hi_acc), i| {
            let subsets = ln_binomial(n, u64::from(i) + 1);
            let s = f64::from(i);
            let lo = chi_square_cdf(t_param(i, d), s * a * a).expect("valid arguments");
            let hi = chi_square_sf(l_param(i, d), s * b * b).expect("valid arguments");
            (
                lo_acc + (subsets + lo.ln()).exp(),
                hi_acc + (subsets + hi.ln()).exp(),
            )
        }),
    }
}

fn certify(mode: Mode, params: BoundParams) -> Option<Certificate> {
    let (lo, hi) = union_masses(mode, params.n, params.d, params.k, params.a, params.b);
    let failure_bound = lo + hi;
    (failure_bound < 1.0).then_some(Certificate {
        params,
        failure_bound,
        contraction_mass: lo,
        expansion_mass: hi,
        mode,
    })
}

/// `C(n,2) (Pr[χ²_d ≤ a²] + Pr[χ²_d ≥ b²])` with exact CDFs; a certificate
/// when the sum is below one.
pub fn distance_union_bound_feasible(n: u64, d: u32, a: f64, b: f64) -> Option<Certificate> {
    let params = BoundParams::new(n, d, 1, a, b).ok()?;
    certify(Mode::Distance, params)
}

fn check_volume_k(d: u32, k: u32) -> Result<()> {
    if k == 0 || k > d / 2 {
        return Err(Error::Domain(format!(
            "volume certificates need 1 <= k <= floor(d/2) = {}, got k = {k}",
            d / 2
        )));
    }
    Ok(())
}

/// `Σ_{i=1}^{k} C(n, i+1) (Pr[χ²_{t_i} ≤ i·a²] + Pr[χ²_{l_i} ≥ i·b²])` with
/// exact CDFs; a certificate when the sum is below one. `k` is the largest
/// simplex dimension (subsets of up to `k + 1` points).
///
/// Certificates are refused for `k > floor(d/2)`.
pub fn volume_union_bound_feasible(
    n: u64,
    d: u32,
    k: u32,
    a: f64,
    b: f64,
) -> Result<Option<Certificate>> {
    check_volume_k(d, k)?;
    Ok(BoundParams::new(n, d, k, a, b)
        .ok()
        .and_then(|p| certify(Mode::Volume, p)))
}

/// Outcome of [`search_thresholds`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearch {
    pub params: BoundParams,
    pub certificate: Certificate,
    /// `(b/a)` divided by the closed-form bound at `c = 1`; `None` when the
    /// closed form is undefined (volume mode with `n < 16`).
    pub implied_constant: Option<f64>,
}

/// [`search_thresholds_with_split`] with the contraction budget at one half.
pub fn search_thresholds(n: u64, d: u32, k: u32, mode: Mode) -> Result<ThresholdSearch> {
    search_thresholds_with_split(n, d, k, mode, DEFAULT_SPLIT)
}

/// Finds the largest `a ∈ (0, √d]` whose contraction mass is below `split`
/// and the smallest `b ∈ [√d, 10³]` whose expansion mass is below
/// `1 - split`, each to relative precision [`SEARCH_REL_TOL`].
pub fn search_thresholds_with_split(
    n: u64,
    d: u32,
    k: u32,
    mode: Mode,
    split: f64,
) -> Result<ThresholdSearch> {
    if !(split > 0.0 && split < 1.0) {
        return Err(Error::InvalidInput(format!(
            "split must lie in (0, 1), got {split}"
        )));
    }
    let k = match mode {
        Mode::Distance => 1,
        Mode::Volume => {
            check_volume_k(d, k)?;
            k
        }
    };
    // Validates n, d and k before any CDF is evaluated.
    BoundParams::new(n, d, k, 0.5, 1.0)?;

    let contraction = |a: f64| union_masses(mode, n, d, k, a, f64::INFINITY).0;
    let expansion = |b: f64| union_masses(mode, n, d, k, 0.0, b).1;
    let root_d = f64::from(d).sqrt();

    let a = if contraction(root_d) < split {
        root_d
    } else {
        // Find a feasible lower end, then bisect with `lo` feasible, `hi` not.
        let (mut lo, mut hi) = (root_d / 2.0, root_d);
        let mut halvings = 0;
        while contraction(lo) >= split {
            hi = lo;
            lo /= 2.0;
            halvings += 1;
            if halvings > 1000 {
                return Err(Error::Infeasible(
                    "no contraction threshold in (0, sqrt(d)]".into(),
                ));
            }
        }
        while hi - lo > SEARCH_REL_TOL * lo {
            let mid = 0.5 * (lo + hi);
            if contraction(mid) < split {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };

    let budget = 1.0 - split;
    if expansion(B_SEARCH_MAX) >= budget {
        return Err(Error::Infeasible(format!(
            "no expansion threshold in [sqrt(d), {B_SEARCH_MAX}]"
        )));
    }
    let b = if expansion(root_d) < budget {
        root_d
    } else {
        let (mut lo, mut hi) = (root_d, B_SEARCH_MAX);
        while hi - lo > SEARCH_REL_TOL * hi {
            let mid = 0.5 * (lo + hi);
            if expansion(mid) < budget {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };

    let params = BoundParams::new(n, d, k, a, b).map_err(|e| Error::Infeasible(e.to_string()))?;
    let certificate = certify(mode, params).ok_or_else(|| {
        Error::Infeasible("union bound is not below one at the searched thresholds".into())
    })?;
    let implied_constant = match mode {
        Mode::Distance => Some(params.ratio() / distance_distortion_bound(n as f64, d, 1.0)),
        Mode::Volume => volume_distortion_bound(n as f64, d, 1.0)
            .ok()
            .map(|v| params.ratio() / v),
    };
    Ok(ThresholdSearch {
        params,
        certificate,
        implied_constant,
    })
}

/// Outcome of checking one closed-form bound against exact values on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCheck {
    pub name: String,
    pub points_checked: usize,
    pub violations: usize,
    /// Smallest `ln(bound) - ln(exact)` over the grid; positive when the bound holds everywhere.
    pub worst_log_margin: f64,
}

impl GridCheck {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            points_checked: 0,
            violations: 0,
            worst_log_margin: f64::INFINITY,
        }
    }

    /// Records `exact ≤ bound` (or `<` when `strict`).
    fn record(&mut self, exact: f64, bound: f64, strict: bool) {
        self.points_checked += 1;
        let holds = if strict {
            exact < bound
        } else {
            exact <= bound
        };
        if !holds {
            self.violations += 1;
        }
        if exact > 0.0 {
            self.worst_log_margin = self.worst_log_margin.min(bound.ln() - exact.ln());
        }
    }

    pub fn pass(&self) -> bool {
        self.violations == 0 && self.points_checked > 0
    }
}

fn linspace(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    (0..count).map(move |i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
}

/// Checks every closed-form bound against exact values on fixed grids:
///
/// * Stirling sandwich on `Γ(a+1)`, 400 log-spaced `a ∈ [0.1, 1000]`
/// * `γ(a,x) ≤ x^a/a` on `a ∈ [0.5, 20] × x ∈ [0, 40]` (10 × 10)
/// * `Γ(a,x) < 2e^{-x}x^{a+1}` on the same `a` values, `x` from just above
///   `2(a+1)` out to `2(a+1) + 40`
/// * contraction bound vs `Pr[χ²_t ≤ s·a²]`, `s ∈ [1,8]`, `d ∈ [3,20]`,
///   `a ∈ {0.05, 0.10, ..., 1}`
/// * expansion bound vs `Pr[χ²_l ≥ s·b²]` on the same `(s, d)` with
///   `s·b²` from just above `2l + 4` to `6(2l + 4)`
pub fn analytic_bound_checks() -> Vec<GridCheck> {
    use crate::gamma::{
        log_gamma, lower_incgamma_bound, regularized_lower_incomplete_gamma,
        regularized_upper_incomplete_gamma, stirling_log_bounds, upper_incgamma_bound,
    };

    let mut stirling = GridCheck::new("stirling_sandwich");
    for i in 0..400 {
        let a = 0.1 * 10f64.powf(4.0 * f64::from(i) / 399.0);
        let b = stirling_log_bounds(a).expect("a > 0");
        let lg = log_gamma(a + 1.0).expect("a > 0");
        let ok = b.lower < lg && lg < b.upper;
        stirling.points_checked += 1;
        if !ok {
            stirling.violations += 1;
        }
        stirling.worst_log_margin = stirling
            .worst_log_margin
            .min((lg - b.lower).min(b.upper - lg));
    }

    let mut lower = GridCheck::new("lower_incomplete_gamma_bound");
    let mut upper = GridCheck::new("upper_incomplete_gamma_bound");
    for a in linspace(0.5, 20.0, 10) {
        let gamma_a = log_gamma(a).expect("a > 0").exp();
        for x in linspace(0.0, 40.0, 10) {
            let exact = regularized_lower_incomplete_gamma(a, x).expect("valid") * gamma_a;
            lower.record(exact, lower_incgamma_bound(a, x).expect("valid"), false);
        }
        let edge = 2.0 * (a + 1.0);
        for x in [edge * (1.0 + 1e-9), edge + 1e-3, edge + 0.5]
            .into_iter()
            .chain(linspace(edge + 1.0, edge + 40.0, 10))
        {
            let exact = regularized_upper_incomplete_gamma(a, x).expect("valid") * gamma_a;
            upper.record(exact, upper_incgamma_bound(a, x).expect("x > 2(a+1)"), true);
        }
    }

    let mut contraction = GridCheck::new("contraction_tail_bound");
    let mut expansion = GridCheck::new("expansion_tail_bound");
    for d in 3..=20u32 {
        for s in 1..=8u32.min(d) {
            let t = t_param(s, d);
            if t > 2 {
                for i in 1..=20 {
                    let a = 0.05 * f64::from(i);
                    let exact = chi_square_cdf(t, f64::from(s) * a * a).expect("valid");
                    contraction.record(
                        exact,
                        contraction_tail_bound(s, d, a).expect("domain checked"),
                        false,
                    );
                }
            }
            let l = l_param(s, d);
            if l > 2 {
                let edge = f64::from(2 * l + 4);
                for factor in [1.0 + 1e-9, 1.01, 1.1, 1.25, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0] {
                    let x = edge * factor;
                    let b = (x / f64::from(s)).sqrt();
                    let exact = chi_square_sf(l, x).expect("valid");
                    // Recompute x from b as the bound does; nudge b up if rounding left the domain.
                    let bound = expansion_tail_bound(s, d, b)
                        .or_else(|_| expansion_tail_bound(s, d, b * (1.0 + 1e-12)));
                    expansion.record(exact, bound.expect("s b^2 > 2l + 4"), false);
                }
            }
        }
    }

    vec![stirling, lower, upper, contraction, expansion]
}
