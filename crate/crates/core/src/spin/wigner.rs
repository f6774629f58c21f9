//! Wigner small-d functions, 3j symbols and Clebsch-Gordan coefficients.
//!
//! All angular-momentum arguments are doubled (`tj = 2j`, `tm = 2m`) so that
//! half-integers stay exact.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const MAX_FACT: usize = 64;

fn ln_fact(n: i32) -> f64 {
    static TABLE: OnceLock<[f64; MAX_FACT]> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = [0.0; MAX_FACT];
        for k in 1..MAX_FACT {
            t[k] = t[k - 1] + (k as f64).ln();
        }
        t
    });
    table[n as usize]
}

#[inline]
fn sign(k: i32) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn valid_pair(tj: i32, tm: i32) -> bool {
    tj >= 0 && tm.abs() <= tj && (tj + tm) % 2 == 0
}

/// `d^j_{m'm}(β)` by the factorial sum.
pub fn wigner_small_d(tj: i32, tmp: i32, tm: i32, beta: f64) -> Result<f64> {
    if !valid_pair(tj, tmp) || !valid_pair(tj, tm) {
        return Err(Error::InvalidProjection(format!("d^{tj}/2 with 2m' = {tmp}, 2m = {tm}")));
    }
    let jpm = (tj + tm) / 2;
    let jmm = (tj - tm) / 2;
    let jpmp = (tj + tmp) / 2;
    let jmmp = (tj - tmp) / 2;
    let dm = (tmp - tm) / 2;
    let (s, cs) = (beta / 2.0).sin_cos();
    let pre = 0.5 * (ln_fact(jpm) + ln_fact(jmm) + ln_fact(jpmp) + ln_fact(jmmp));
    let k_lo = 0.max(-dm);
    let k_hi = jpm.min(jmmp);
    let mut sum = 0.0;
    for k in k_lo..=k_hi {
        let den = ln_fact(jpm - k) + ln_fact(k) + ln_fact(jmmp - k) + ln_fact(k + dm);
        let cos_pow = tj - dm - 2 * k;
        let sin_pow = 2 * k + dm;
        sum += sign(k + dm) * (pre - den).exp() * cs.powi(cos_pow) * s.powi(sin_pow);
    }
    Ok(sum)
}

/// Wigner 3j symbol `(j1 j2 j3; m1 m2 m3)` by the Racah formula.
///
/// Returns 0 when a selection rule fails.
pub fn three_j(tj1: i32, tj2: i32, tj3: i32, tm1: i32, tm2: i32, tm3: i32) -> f64 {
    if !valid_pair(tj1, tm1) || !valid_pair(tj2, tm2) || !valid_pair(tj3, tm3) {
        return 0.0;
    }
    if tm1 + tm2 + tm3 != 0 {
        return 0.0;
    }
    if tj3 > tj1 + tj2 || tj3 < (tj1 - tj2).abs() || (tj1 + tj2 + tj3) % 2 != 0 {
        return 0.0;
    }
    let a = (tj1 + tj2 - tj3) / 2;
    let b = (tj1 - tj2 + tj3) / 2;
    let cc = (-tj1 + tj2 + tj3) / 2;
    let big = (tj1 + tj2 + tj3) / 2 + 1;
    let ln_tri = ln_fact(a) + ln_fact(b) + ln_fact(cc) - ln_fact(big);
    let ln_m = ln_fact((tj1 + tm1) / 2)
        + ln_fact((tj1 - tm1) / 2)
        + ln_fact((tj2 + tm2) / 2)
        + ln_fact((tj2 - tm2) / 2)
        + ln_fact((tj3 + tm3) / 2)
        + ln_fact((tj3 - tm3) / 2);
    let pre = 0.5 * (ln_tri + ln_m);

    let t1 = (tj3 - tj2 + tm1) / 2;
    let t2 = (tj3 - tj1 - tm2) / 2;
    let t3 = a;
    let t4 = (tj1 - tm1) / 2;
    let t5 = (tj2 + tm2) / 2;
    let k_lo = 0.max(-t1).max(-t2);
    let k_hi = t3.min(t4).min(t5);
    let mut sum = 0.0;
    for k in k_lo..=k_hi {
        let den = ln_fact(k) + ln_fact(t1 + k) + ln_fact(t2 + k) + ln_fact(t3 - k) + ln_fact(t4 - k) + ln_fact(t5 - k);
        sum += sign(k) * (pre - den).exp();
    }
    sign((tj1 - tj2 - tm3) / 2) * sum
}

/// `⟨j1 m1, j2 m2 | J M⟩` with the Condon-Shortley phase.
pub fn clebsch_gordan(tj1: i32, tm1: i32, tj2: i32, tm2: i32, tjj: i32, tmm: i32) -> f64 {
    sign((tj1 - tj2 + tmm) / 2) * ((tjj + 1) as f64).sqrt() * three_j(tj1, tj2, tjj, tm1, tm2, -tmm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn projections(tj: i32) -> impl Iterator<Item = i32> {
        (0..=tj).map(move |i| tj - 2 * i)
    }

    #[test]
    fn small_d_closed_forms() {
        let b = 0.83;
        assert!((wigner_small_d(1, 1, 1, b).unwrap() - (b / 2.0).cos()).abs() < 1e-15);
        assert!((wigner_small_d(1, 1, -1, b).unwrap() + (b / 2.0).sin()).abs() < 1e-15);
        assert!((wigner_small_d(2, 0, 0, b).unwrap() - b.cos()).abs() < 1e-15);
        assert!((wigner_small_d(2, 2, 0, b).unwrap() + b.sin() / 2f64.sqrt()).abs() < 1e-15);
        assert!(wigner_small_d(1, 0, 1, b).is_err());
        assert!(wigner_small_d(2, 4, 0, b).is_err());
    }

    #[test]
    fn small_d_at_zero_is_identity() {
        for tj in 0..=4 {
            for tmp in projections(tj) {
                for tm in projections(tj) {
                    let d = wigner_small_d(tj, tmp, tm, 0.0).unwrap();
                    let e = if tmp == tm { 1.0 } else { 0.0 };
                    assert!((d - e).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn three_j_values() {
        assert!((three_j(1, 1, 0, 1, -1, 0) - FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(three_j(1, 1, 0, 1, 1, 0), 0.0);
        assert_eq!(three_j(1, 1, 4, 1, -1, 0), 0.0);
        // (1 1 1; 1 -1 0) = 1/√6
        assert!((three_j(2, 2, 2, 2, -2, 0) - 1.0 / 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn three_j_orthogonality() {
        for tj1 in 0i32..=4 {
            for tj2 in 0..=4 {
                let mut tj3 = (tj1 - tj2).abs();
                while tj3 <= tj1 + tj2 {
                    for tm3 in projections(tj3) {
                        let mut s = 0.0;
                        for tm1 in projections(tj1) {
                            for tm2 in projections(tj2) {
                                s += (tj3 + 1) as f64 * three_j(tj1, tj2, tj3, tm1, tm2, tm3).powi(2);
                            }
                        }
                        assert!((s - 1.0).abs() < 1e-13, "{tj1} {tj2} {tj3} {tm3}: {s}");
                    }
                    tj3 += 2;
                }
            }
        }
    }

    #[test]
    fn clebsch_gordan_table() {
        let s = FRAC_1_SQRT_2;
        assert!((clebsch_gordan(1, 1, 1, -1, 0, 0) - s).abs() < 1e-15);
        assert!((clebsch_gordan(1, -1, 1, 1, 0, 0) + s).abs() < 1e-15);
        assert!((clebsch_gordan(1, 1, 1, -1, 2, 0) - s).abs() < 1e-15);
        assert!((clebsch_gordan(1, 1, 2, 2, 3, 3) - 1.0).abs() < 1e-15);
        // ⟨½ ½, 1 0 | 3/2 ½⟩ = √(2/3)
        assert!((clebsch_gordan(1, 1, 2, 0, 3, 1) - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn small_d_rows_are_normalized(beta in -6.0f64..6.0) {
            for tj in 0..=4 {
                for tmp in projections(tj) {
                    let s: f64 = projections(tj).map(|tm| wigner_small_d(tj, tmp, tm, beta).unwrap().powi(2)).sum();
                    prop_assert!((s - 1.0).abs() < 1e-13);
                }
            }
        }
    }
}
