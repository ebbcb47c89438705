//! Independent oracles shared by the integration and acceptance suites.
//! These deliberately avoid the library's own closed forms: norms come
//! from exact rational quadratic roots at 256-bit precision, eigenvalues
//! from exact characteristic-polynomial sign changes.

use rug::float::Round;
use rug::ops::Pow;
use rug::{Float, Rational};

/// `log` of the spectral norm of a 2x2 matrix with f64 (hence rational)
/// entries: the larger root of `s^2 - t s + det^2` evaluated in 256-bit
/// arithmetic from exact rational `t` and `det`.
pub fn log_norm_oracle(m: [[f64; 2]; 2]) -> f64 {
    let r = |v: f64| Rational::from_f64(v).expect("finite entry");
    let t = r(m[0][0]).pow(2) + r(m[0][1]).pow(2) + r(m[1][0]).pow(2) + r(m[1][1]).pow(2);
    let det = r(m[0][0]) * r(m[1][1]) - r(m[0][1]) * r(m[1][0]);
    let det2 = det.pow(2);
    let prec = 256;
    let tf = Float::with_val(prec, &t);
    let disc = Float::with_val(prec, &t).pow(2) - 4 * Float::with_val(prec, &det2);
    let disc = if disc < 0 { Float::with_val(prec, 0) } else { disc };
    let s_sq = (tf + disc.sqrt()) / 2;
    // log norm = (1/2) log(s_sq)
    let (l, _) = Float::with_val_round(prec, s_sq.ln_ref(), Round::Nearest);
    l.to_f64() / 2.0
}

/// All eigenvalues of a symmetric tridiagonal matrix with unit hopping via
/// the exact characteristic polynomial: signs of `p_n` are computed in
/// rational arithmetic, roots isolated by grid refinement and bisected.
pub fn charpoly_eigenvalues(diag: &[Rational], tol: f64) -> Vec<f64> {
    let n = diag.len();
    // p_0 = 1, p_1 = d_0 - x, p_k = (d_{k-1} - x) p_{k-1} - p_{k-2}
    let eval = |x: &Rational| -> Rational {
        let mut pm1 = Rational::from(1);
        let mut p = Rational::from(&diag[0] - x);
        for d in diag.iter().skip(1) {
            let next = Rational::from(d - x) * &p - &pm1;
            pm1 = p;
            p = next;
        }
        p
    };
    let bound_f = diag
        .iter()
        .map(|d| d.to_f64().abs())
        .fold(0.0f64, f64::max)
        + 2.0
        + 1.0;
    let bound = Rational::from_f64(bound_f).unwrap();

    // refine the sampling grid until all n sign changes are isolated
    let mut grid_n = 64usize.max(4 * n);
    loop {
        let lo = -bound.clone();
        let step = Rational::from((2, 1)) * &bound / Rational::from(grid_n as u64);
        let mut brackets = Vec::new();
        let mut prev_x = lo.clone();
        let mut prev_s = eval(&prev_x).cmp0();
        for i in 1..=grid_n {
            let x = Rational::from(&lo + Rational::from(&step * Rational::from(i as u64)));
            let s = eval(&x).cmp0();
            if s != prev_s && prev_s != std::cmp::Ordering::Equal {
                brackets.push((prev_x.clone(), x.clone()));
            } else if prev_s == std::cmp::Ordering::Equal {
                // grid hit a root exactly
                brackets.push((prev_x.clone(), prev_x.clone()));
            }
            prev_x = x;
            prev_s = s;
        }
        if brackets.len() == n {
            let mut out = Vec::with_capacity(n);
            for (mut a, mut b) in brackets {
                if a == b {
                    out.push(a.to_f64());
                    continue;
                }
                let sa = eval(&a).cmp0();
                while Rational::from(&b - &a).to_f64() > tol * 0.5 {
                    let mid = Rational::from(&a + &b) / Rational::from(2);
                    let sm = eval(&mid).cmp0();
                    if sm == std::cmp::Ordering::Equal {
                        a = mid.clone();
                        b = mid;
                        break;
                    }
                    if sm == sa {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                out.push((Rational::from(&a + &b) / Rational::from(2)).to_f64());
            }
            out.sort_by(|x, y| x.partial_cmp(y).unwrap());
            return out;
        }
        grid_n *= 4;
        assert!(grid_n < 1 << 22, "root isolation failed to converge");
    }
}

/// Deterministic xorshift-free mixing for test-local value draws.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform f64 in [0, 1) from a seed and index, deterministic.
pub fn uniform01(seed: u64, idx: u64) -> f64 {
    (mix64(seed ^ mix64(idx)) >> 11) as f64 / (1u64 << 53) as f64
}
