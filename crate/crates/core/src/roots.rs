//! Scalar root finding and maximization: bracket expansion, Brent's method,
//! grid-scan bracketing and golden-section search.

use crate::error::{Error, Result};

/// Converged root of a scalar equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// A sign-change bracket `[lo, hi]` with function values at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

const MAX_BRENT_ITER: usize = 200;

/// Brent's method on a sign-change bracket.
///
/// Iterates until the bracket is narrower than `xtol` (plus a few ulps of
/// the current iterate) or an exact zero is hit.
pub fn brent<F>(mut f: F, bracket: Bracket, xtol: f64) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    let Bracket {
        lo: mut a,
        hi: mut b,
        f_lo: mut fa,
        f_hi: mut fb,
    } = bracket;
    if fa == 0.0 {
        return Ok(Root {
            x: a,
            fx: fa,
            iterations: 0,
        });
    }
    if fb == 0.0 {
        return Ok(Root {
            x: b,
            fx: fb,
            iterations: 0,
        });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::BracketFailure {
            what: "brent",
            lo: a,
            hi: b,
        });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for iter in 1..=MAX_BRENT_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(Root {
                x: b,
                fx: fb,
                iterations: iter,
            });
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::IterationCap {
        what: "brent",
        cap: MAX_BRENT_ITER,
    })
}

/// Brackets the root of a monotone function by geometric expansion from
/// the origin: probes `0, ±1, ±2, ±4, …` on the side indicated by the sign
/// of `f(0)`, stopping at `±limit`.
pub fn expand_bracket<F>(
    mut f: F,
    decreasing: bool,
    limit: f64,
    what: &'static str,
) -> Result<(Bracket, usize)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let f0 = f(0.0)?;
    let mut evals = 1;
    if f0 == 0.0 {
        return Ok((
            Bracket {
                lo: 0.0,
                hi: 0.0,
                f_lo: 0.0,
                f_hi: 0.0,
            },
            evals,
        ));
    }
    // The root lies to the right when the function still has the sign it
    // takes at -∞.
    let go_right = (f0 > 0.0) == decreasing;
    let dir = if go_right { 1.0 } else { -1.0 };

    let (mut prev, mut f_prev) = (0.0, f0);
    let mut step: f64 = 1.0;
    loop {
        let x = dir * step.min(limit);
        let fx = f(x)?;
        evals += 1;
        if fx.signum() != f_prev.signum() || fx == 0.0 {
            let bracket = if go_right {
                Bracket {
                    lo: prev,
                    hi: x,
                    f_lo: f_prev,
                    f_hi: fx,
                }
            } else {
                Bracket {
                    lo: x,
                    hi: prev,
                    f_lo: fx,
                    f_hi: f_prev,
                }
            };
            return Ok((bracket, evals));
        }
        if step >= limit {
            let (lo, hi) = if go_right {
                (0.0, limit)
            } else {
                (-limit, 0.0)
            };
            return Err(Error::BracketFailure { what, lo, hi });
        }
        prev = x;
        f_prev = fx;
        step *= 2.0;
    }
}

/// Scans `[lo, hi]` on a uniform grid and returns every sign-change
/// bracket, in ascending order.
pub fn scan_brackets<F>(mut f: F, lo: f64, hi: f64, step: f64) -> Result<Vec<Bracket>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let n = ((hi - lo) / step).round() as usize;
    let mut out = Vec::new();
    let mut x_prev = lo;
    let mut f_prev = f(lo)?;
    for i in 1..=n {
        let x = if i == n { hi } else { lo + i as f64 * step };
        let fx = f(x)?;
        if f_prev == 0.0 {
            out.push(Bracket {
                lo: x_prev,
                hi: x_prev,
                f_lo: 0.0,
                f_hi: 0.0,
            });
        } else if fx.signum() != f_prev.signum() && fx != 0.0 {
            out.push(Bracket {
                lo: x_prev,
                hi: x,
                f_lo: f_prev,
                f_hi: fx,
            });
        }
        x_prev = x;
        f_prev = fx;
    }
    if f_prev == 0.0 {
        out.push(Bracket {
            lo: x_prev,
            hi: x_prev,
            f_lo: 0.0,
            f_hi: 0.0,
        });
    }
    Ok(out)
}

/// Golden-section search for the maximum of a unimodal function on `[a, b]`.
/// Returns `(argmax, max)`.
pub fn golden_max<F>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut iters = 0;
    while (b - a).abs() > xtol {
        iters += 1;
        if iters > 500 {
            return Err(Error::IterationCap {
                what: "golden section",
                cap: 500,
            });
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(f: impl Fn(f64) -> f64) -> impl FnMut(f64) -> Result<f64> {
        move |x| Ok(f(x))
    }

    #[test]
    fn brent_finds_cubic_root() {
        let g = |x: f64| x * x * x - 2.0 * x - 5.0;
        let br = Bracket {
            lo: 2.0,
            hi: 3.0,
            f_lo: g(2.0),
            f_hi: g(3.0),
        };
        let root = brent(ok(g), br, 1e-14).unwrap();
        assert!((root.x - 2.094_551_481_542_326_5).abs() < 1e-13);
        assert!(root.iterations < 20);
    }

    #[test]
    fn brent_rejects_same_sign() {
        let br = Bracket {
            lo: 0.0,
            hi: 1.0,
            f_lo: 1.0,
            f_hi: 2.0,
        };
        assert!(matches!(
            brent(ok(|x| x + 1.0), br, 1e-12),
            Err(Error::BracketFailure { .. })
        ));
    }

    #[test]
    fn expansion_in_both_directions() {
        let (b, _) = expand_bracket(ok(|x| 7.5 - x), true, 50.0, "t").unwrap();
        assert!(b.lo <= 7.5 && 7.5 <= b.hi);
        let (b, _) = expand_bracket(ok(|x| -13.0 - x), true, 50.0, "t").unwrap();
        assert!(b.lo <= -13.0 && -13.0 <= b.hi);
        let (b, _) = expand_bracket(ok(|x| x - 3.0), false, 50.0, "t").unwrap();
        assert!(b.lo <= 3.0 && 3.0 <= b.hi);
        // Root beyond the last doubling but inside the limit.
        let (b, _) = expand_bracket(ok(|x| 45.0 - x), true, 50.0, "t").unwrap();
        assert_eq!((b.lo, b.hi), (32.0, 50.0));
    }

    #[test]
    fn expansion_reports_failure() {
        let err = expand_bracket(ok(|x| 60.0 - x), true, 50.0, "a").unwrap_err();
        assert_eq!(
            err,
            Error::BracketFailure {
                what: "a",
                lo: 0.0,
                hi: 50.0
            }
        );
    }

    #[test]
    fn scan_finds_all_sign_changes() {
        let brackets = scan_brackets(ok(f64::sin), -1.0, 7.0, 0.05).unwrap();
        assert_eq!(brackets.len(), 3);
        let roots: Vec<f64> = brackets
            .into_iter()
            .map(|b| brent(ok(f64::sin), b, 1e-14).unwrap().x)
            .collect();
        for (r, e) in roots
            .iter()
            .zip([0.0, std::f64::consts::PI, 2.0 * std::f64::consts::PI])
        {
            assert!((r - e).abs() < 1e-12);
        }
    }

    #[test]
    fn golden_locates_parabola_peak() {
        let (x, fx) = golden_max(ok(|x| -(x - 0.37).powi(2) + 2.0), 0.0, 1.0, 1e-8).unwrap();
        assert!((x - 0.37).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-12);
    }
}
