//! Finite-window checks of the dominated-convergence results.

mod appendix;
mod channel;
mod dct;
mod mixture;
mod relative;

pub use appendix::appendix_domination;
pub use channel::{channel_mi_checks, ChannelChecks};
pub use dct::{check_dct_basic, check_dct_simon};
pub use mixture::{check_convex_mixture, truncation_criterion};
pub use relative::{relative_entropy_domination, relative_entropy_sum};

use super::family::BoundFamily;
use super::trend::ResidualSeries;
use super::verdict::VerdictBuilder;
use crate::error::{Error, Result};
use crate::exec::{try_map_range, Execution};
use crate::extended::ExtendedReal;
use crate::operator::PositiveOperator;

/// Slack for every pointwise inequality.
pub const INEQUALITY_TOL: f64 = 1e-8;

/// `|v − v_0|`, `+∞` when exactly one side is infinite, NaN when both are.
pub(crate) fn ext_residual(v: ExtendedReal, v0: ExtendedReal) -> f64 {
    match (v, v0) {
        (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => (a - b).abs(),
        (ExtendedReal::PosInfinity, ExtendedReal::PosInfinity) => f64::NAN,
        _ => f64::INFINITY,
    }
}

/// Residuals `|v_n − v_0|` for `n = 1..`.
pub(crate) fn residual_series(name: impl Into<String>, values: &[ExtendedReal]) -> ResidualSeries {
    let v0 = values[0];
    ResidualSeries::new(name, 1, values[1..].iter().map(|&v| ext_residual(v, v0)).collect())
}

/// `f_n(x_n)` for every member of a window.
pub(crate) fn window_values(
    bound: &BoundFamily,
    xs: &[PositiveOperator],
    exec: Execution,
) -> Result<Vec<ExtendedReal>> {
    try_map_range(exec, xs.len(), |n| bound.value(n, &xs[n]))
}

/// Records a hypothesis that `value` is finite.
pub(crate) fn require_finite(b: &mut VerdictBuilder, name: &str, value: ExtendedReal) {
    match value {
        ExtendedReal::Finite(v) => {
            b.hypothesis(format!("{name} < +inf"), true, f64::INFINITY, format!("value {v:.6e}"))
        }
        ExtendedReal::PosInfinity => b.hypothesis(format!("{name} < +inf"), false, f64::NEG_INFINITY, "value is +inf"),
    };
}

/// Records an inequality from the smallest observed slack, naming where it occurred.
pub(crate) fn record_min_slack(b: &mut VerdictBuilder, name: &str, worst: Option<(f64, String)>) {
    match worst {
        Some((s, at)) => b.inequality(name, s >= -INEQUALITY_TOL, s, format!("smallest slack {s:.3e} at {at}")),
        None => b.inequality(name, true, f64::INFINITY, "no finite instance in the window"),
    };
}

/// Keeps the smaller slack (NaN slacks are skipped).
pub(crate) fn fold_worst(acc: Option<(f64, String)>, next: Option<(f64, String)>) -> Option<(f64, String)> {
    match (acc, next) {
        (a, None) => a,
        (None, Some(n)) if n.0.is_nan() => None,
        (None, n) => n,
        (Some(a), Some(n)) => {
            if n.0 < a.0 {
                Some(n)
            } else {
                Some(a)
            }
        }
    }
}

/// Slacks of the two almost-affinity inequalities at `(x, y, p)`:
/// `f(px + (1−p)y) − p f(x) − (1−p) f(y) + a_f(p)` and
/// `p f(x) + (1−p) f(y) + b_f(p) − f(px + (1−p)y)`. `None` when a value is infinite
/// or the side is not declared.
pub fn laa_slacks(
    bound: &BoundFamily,
    n: usize,
    x: &PositiveOperator,
    y: &PositiveOperator,
    p: f64,
) -> Result<(Option<f64>, Option<f64>)> {
    let mix = PositiveOperator::mix(y, x, p)?;
    let (fx, fy, fm) = (bound.value(n, x)?, bound.value(n, y)?, bound.value(n, &mix)?);
    let (Some(fx), Some(fy), Some(fm)) = (fx.value(), fy.value(), fm.value()) else {
        return Ok((None, None));
    };
    let avg = p * fx + (1.0 - p) * fy;
    let fam = bound.family();
    let lower = fm - avg + fam.a().eval(p);
    let upper = fam.b().map(|b| avg + b.eval(p) - fm);
    Ok((Some(lower), upper))
}

/// Fails with a domination error naming the first `n` where `c·lo_n ≤ hi_n` breaks.
pub(crate) fn check_domination(
    lo: &[PositiveOperator],
    hi: &[PositiveOperator],
    c: f64,
    inequality: &str,
    exec: Execution,
) -> Result<()> {
    try_map_range(exec, lo.len(), |n| -> Result<()> {
        let scaled = lo[n].scaled(c)?;
        match hi[n].checked_sub(&scaled) {
            Ok(_) => Ok(()),
            Err(Error::NotPositive { min_eigenvalue, .. }) => {
                Err(Error::Domination { n, inequality: inequality.to_string(), min_eigenvalue })
            }
            Err(e) => Err(e),
        }
    })?;
    Ok(())
}

/// Slack `rhs − lhs` of `lhs ≤ rhs` over extended reals: `None` when `rhs = +∞`
/// (vacuous), `−∞` when only `lhs` is infinite.
pub(crate) fn le_slack(lhs: ExtendedReal, rhs: ExtendedReal) -> Option<f64> {
    match (lhs, rhs) {
        (_, ExtendedReal::PosInfinity) => None,
        (ExtendedReal::PosInfinity, _) => Some(f64::NEG_INFINITY),
        (ExtendedReal::Finite(l), ExtendedReal::Finite(r)) => Some(r - l),
    }
}
