//! Spherical Bessel functions, their zeros, and real spherical harmonics.

/// `j_l(x)` for l in `0..=lmax`, stable for all x ≥ 0.
///
/// Small arguments use the ascending series; otherwise Miller's downward
/// recurrence normalized against `j_0` (or `j_1` near a `j_0` zero).
pub fn spherical_jn(lmax: usize, x: f64) -> Vec<f64> {
    assert!(x >= 0.0 && x.is_finite());
    let mut out = vec![0.0; lmax + 1];
    if x < 0.5 {
        for (l, slot) in out.iter_mut().enumerate() {
            *slot = series_jl(l, x);
        }
        return out;
    }
    let j0 = x.sin() / x;
    let j1 = x.sin() / (x * x) - x.cos() / x;
    if lmax == 0 {
        out[0] = j0;
        return out;
    }
    let start = lmax + 16 + x as usize;
    let mut jp = 0.0f64; // j_{l+1}
    let mut jc = 1e-300f64; // j_l
    let mut tmp = vec![0.0; lmax + 1];
    for l in (0..start).rev() {
        let jm = (2.0 * (l as f64 + 1.0) + 1.0) / x * jc - jp;
        jp = jc;
        jc = jm;
        if l <= lmax {
            tmp[l] = jc;
        }
        // rescale to avoid overflow
        if jc.abs() > 1e250 {
            jp /= 1e250;
            jc /= 1e250;
            for t in tmp.iter_mut() {
                *t /= 1e250;
            }
        }
    }
    let scale = if j0.abs() > 1e-3 * j1.abs() || lmax == 0 {
        j0 / tmp[0]
    } else {
        j1 / tmp[1]
    };
    for l in 0..=lmax {
        out[l] = tmp[l] * scale;
    }
    out
}

fn series_jl(l: usize, x: f64) -> f64 {
    // j_l(x) = x^l / (2l+1)!! * sum_s (-x²/2)^s / (s! (2l+3)(2l+5)...(2l+2s+1))
    let mut dfact = 1.0f64;
    for k in 0..l {
        dfact *= (2 * k + 3) as f64;
    }
    let lead = x.powi(l as i32) / dfact;
    let half_x2 = 0.5 * x * x;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for s in 1..40 {
        term *= -half_x2 / (s as f64 * (2 * l + 2 * s + 1) as f64);
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    lead * sum
}

/// The k-th positive zero of `j_l` (k ≥ 1), to ~1e-13 relative.
///
/// Zeros interlace: `a(l,k)` lies between `a(l-1,k)` and `a(l-1,k+1)`, with
/// `a(0,k) = kπ` exact, so brackets are built up in l and bisected.
pub fn bessel_zero(l: usize, k: usize) -> f64 {
    assert!(k >= 1);
    if l == 0 {
        return k as f64 * std::f64::consts::PI;
    }
    let lo = bessel_zero(l - 1, k);
    let hi = bessel_zero(l - 1, k + 1);
    bisect_jl(l, lo + 1e-9, hi - 1e-9)
}

fn bisect_jl(l: usize, mut lo: f64, mut hi: f64) -> f64 {
    let f = |x: f64| spherical_jn(l, x)[l];
    let mut flo = f(lo);
    debug_assert!(flo * f(hi) < 0.0, "bracket must straddle a zero");
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
        if hi - lo < 1e-13 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Real orthonormal spherical harmonic `Y_{l,m}` at direction `(x,y,z)/r`.
///
/// `m = 0` is the zonal harmonic; `m > 0` carries `cos(mφ)` and `m < 0`
/// carries `sin(|m|φ)`. Returns 0 for `l > 0` at `r = 0`.
pub fn real_sph_harm(l: usize, m: i32, x: f64, y: f64, z: f64) -> f64 {
    let r = (x * x + y * y + z * z).sqrt();
    if l == 0 {
        return 0.5 / std::f64::consts::PI.sqrt();
    }
    if r == 0.0 {
        return 0.0;
    }
    let ct = (z / r).clamp(-1.0, 1.0);
    let am = m.unsigned_abs() as usize;
    let p = assoc_legendre(l, am, ct);
    let norm = {
        let mut ratio = 1.0f64;
        for j in (l - am + 1)..=(l + am) {
            ratio *= j as f64;
        }
        ((2 * l + 1) as f64 / (4.0 * std::f64::consts::PI) / ratio).sqrt()
    };
    if m == 0 {
        norm * p
    } else {
        let phi = y.atan2(x);
        let trig = if m > 0 {
            (am as f64 * phi).cos()
        } else {
            (am as f64 * phi).sin()
        };
        std::f64::consts::SQRT_2 * norm * p * trig
    }
}

/// Associated Legendre `P_l^m(x)` without the Condon-Shortley phase.
fn assoc_legendre(l: usize, m: usize, x: f64) -> f64 {
    debug_assert!(m <= l);
    let somx2 = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
    let mut pmm = 1.0f64;
    for k in 0..m {
        pmm *= (2 * k + 1) as f64 * somx2;
    }
    if l == m {
        return pmm;
    }
    let mut pm1 = x * (2 * m + 1) as f64 * pmm;
    if l == m + 1 {
        return pm1;
    }
    let mut p = 0.0;
    for ll in (m + 2)..=l {
        p = ((2 * ll - 1) as f64 * x * pm1 - (ll + m - 1) as f64 * pmm) / (ll - m) as f64;
        pmm = pm1;
        pm1 = p;
    }
    p
}

/// C² cutoff: 1 for `t ≤ 0`, 0 for `t ≥ 1`, quintic smoothstep between.
pub fn quintic_cutoff(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j2_matches_closed_form() {
        // the closed form cancels catastrophically below x ~ 1, so compare
        // only where it is well conditioned
        for x in [1.23f64, 4.56, 12.34] {
            let exact = (3.0 / (x * x * x) - 1.0 / x) * x.sin() - 3.0 / (x * x) * x.cos();
            let got = spherical_jn(2, x)[2];
            assert!((got - exact).abs() <= 1e-12 * exact.abs().max(1e-3), "x={x}");
        }
    }

    #[test]
    fn series_and_recurrence_agree() {
        // the two evaluation paths overlap in validity around the switch
        for l in 0..=5usize {
            for x in [0.6f64, 0.9, 1.5] {
                let series = series_jl(l, x);
                let miller = spherical_jn(l, x)[l];
                assert!(
                    (series - miller).abs() <= 1e-12 * series.abs().max(1e-12),
                    "l={l} x={x}: {series} vs {miller}"
                );
            }
        }
    }

    #[test]
    fn jl_recurrence_holds() {
        let x = 3.7;
        let j = spherical_jn(6, x);
        for l in 1..5usize {
            let lhs = j[l - 1] + j[l + 1];
            let rhs = (2 * l + 1) as f64 / x * j[l];
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn small_argument_limits() {
        let j = spherical_jn(3, 0.0);
        assert_eq!(j[0], 1.0);
        assert_eq!(j[1], 0.0);
        let j = spherical_jn(1, 1e-4);
        assert!((j[1] - 1e-4 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn known_zeros() {
        // reference values computed by independent root bracketing of the
        // closed forms j_1, j_2 (and pi k for j_0)
        assert!((bessel_zero(0, 1) - std::f64::consts::PI).abs() < 1e-12);
        assert!((bessel_zero(1, 1) - 4.493409457909064).abs() < 1e-9);
        assert!((bessel_zero(2, 1) - 5.763459196894550).abs() < 1e-9);
        assert!((bessel_zero(1, 2) - 7.725251836937707).abs() < 1e-9);
        assert!((bessel_zero(3, 1) - 6.987932000500519).abs() < 1e-9);
    }

    /// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
    fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0f64, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    }

    #[test]
    fn harmonics_orthonormal_on_sphere() {
        // Gauss-Legendre in cos(theta) is exact for these polynomial
        // integrands; uniform phi grid is exact for trig polynomials
        let (mu, wt) = gauss_legendre(24);
        let n_phi = 32;
        let mut pairs = vec![];
        for l in 0..=3usize {
            for m in -(l as i32)..=(l as i32) {
                pairs.push((l, m));
            }
        }
        for (i, &(l1, m1)) in pairs.iter().enumerate() {
            for &(l2, m2) in pairs.iter().skip(i) {
                let mut acc = 0.0;
                for (j, &ct) in mu.iter().enumerate() {
                    let st = (1.0 - ct * ct).max(0.0).sqrt();
                    for ip in 0..n_phi {
                        let phi = ip as f64 * std::f64::consts::TAU / n_phi as f64;
                        let (x, y, z) = (st * phi.cos(), st * phi.sin(), ct);
                        acc += wt[j]
                            * real_sph_harm(l1, m1, x, y, z)
                            * real_sph_harm(l2, m2, x, y, z);
                    }
                }
                acc *= std::f64::consts::TAU / n_phi as f64;
                let expect = if l1 == l2 && m1 == m2 { 1.0 } else { 0.0 };
                assert!(
                    (acc - expect).abs() < 1e-10,
                    "({l1},{m1})x({l2},{m2}) -> {acc}"
                );
            }
        }
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(quintic_cutoff(-1.0), 1.0);
        assert_eq!(quintic_cutoff(0.0), 1.0);
        assert_eq!(quintic_cutoff(1.0), 0.0);
        assert!((quintic_cutoff(0.5) - 0.5).abs() < 1e-14);
        // monotone
        let mut prev = 1.0;
        for i in 1..=100 {
            let v = quintic_cutoff(i as f64 / 100.0);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }
}
