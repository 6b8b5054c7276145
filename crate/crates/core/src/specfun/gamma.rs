//! Log-gamma on the positive half-line, plus the reciprocal-gamma series
//! that the Bessel machinery needs near unit argument.
//!
//! Strategy by argument range (positive `x` only — nothing in the kriging
//! stack evaluates gamma at negative argument):
//!
//! - core series on `[1.5, 2.5]`: `ln Gamma(2+t) = t(1-gamma_E) +
//!   sum_{k>=2} (-1)^k (zeta(k)-1) t^k / k`, whose coefficients decay like
//!   `2^-k` so 30-odd terms reach f64 roundoff;
//! - `[0.5, 1.5)` and `(0, 0.5)`: pull into the core range by
//!   `Gamma(x+1) = x Gamma(x)` (one or two log corrections);
//! - `(2.5, 10)`: walk down with compensated log accumulation;
//! - `[10, inf)`: Stirling with eight Bernoulli correction terms (the first
//!   omitted term at x = 10 is ~1e-19 relative).

// Coefficient and oracle constants keep their full published digits.
#![allow(clippy::excessive_precision)]

use super::dd::Dd;
use super::SpecFunError;

const EULER_GAMMA: f64 = 0.5772156649015328606065120900824024;
const HALF_LN_TWO_PI: f64 = 0.9189385332046727417803297364056176;

/// zeta(k) - 1 for k = 2..=40 (40-digit values, rounded).
///
/// The core series needs `(zeta(k)-1)/k * t^k` down to 1e-19 with |t| <= 0.5;
/// k = 40 leaves margin (term bound 4^-40 ~ 8e-25).
const ZETA_M1: [f64; 39] = [
    0.6449340668482264364724,
    0.2020569031595942853997,
    0.08232323371113819151600,
    0.03692775514336992633137,
    0.01734306198444913971452,
    0.008349277381922826839798,
    0.004077356197944339378685,
    0.002008392826082214417853,
    0.0009945751278180853371460,
    0.0004941886041194645587023,
    0.0002460865533080482986380,
    0.0001227133475784891467518,
    0.00006124813505870482925855,
    0.00003058823630702049355173,
    0.00001528225940865187173257,
    0.000007637197637899762273600,
    0.000003817293264999839856462,
    0.000001908212716553938925657,
    9.539620338727961131520e-7,
    4.769329867878064631167e-7,
    2.384505027277329900036e-7,
    1.192199259653110730678e-7,
    5.960818905125947961244e-8,
    2.980350351465228018606e-8,
    1.490155482836504123466e-8,
    7.450711789835429491981e-9,
    3.725334024788457054819e-9,
    1.862659723513049006404e-9,
    9.313274324196681828718e-10,
    4.656629065033784072989e-10,
    2.328311833676505492001e-10,
    1.164155017270051977593e-10,
    5.820772087902700889244e-11,
    2.910385044497099686929e-11,
    1.455192189104198423593e-11,
    7.275959835057481014521e-12,
    3.637979547378651190237e-12,
    1.818989650307065947585e-12,
    9.094947840263889282533e-13,
];

/// Taylor coefficients of 1/Gamma(1+t) around t = 0 (40-digit values).
const INV_GAMMA1P_COEFFS: [f64; 31] = [
    1.0,
    0.5772156649015328606065,
    -0.6558780715202538810770,
    -0.04200263503409523552900,
    0.1665386113822914895017,
    -0.04219773455554433674821,
    -0.009621971527876973562115,
    0.007218943246663099542395,
    -0.001165167591859065112114,
    -0.0002152416741149509728157,
    0.0001280502823881161861532,
    -0.00002013485478078823865569,
    -0.000001250493482142670657345,
    0.000001133027231981695882374,
    -2.056338416977607103450e-7,
    6.116095104481415817862e-9,
    5.002007644469222930056e-9,
    -1.181274570487020144588e-9,
    1.043426711691100510492e-10,
    7.782263439905071254050e-12,
    -3.696805618642205708188e-12,
    5.100370287454475979015e-13,
    -2.058326053566506783222e-14,
    -5.348122539423017982370e-15,
    1.226778628238260790159e-15,
    -1.181259301697458769514e-16,
    1.186692254751600332580e-18,
    1.412380655318031781556e-18,
    -2.298745684435370206592e-19,
    1.714406321927337433384e-20,
    1.337351730493693114865e-22,
];

/// `ln Gamma(2+t)` for `|t| <= 0.5`.
fn ln_gamma_2p(t: f64) -> f64 {
    debug_assert!(t.abs() <= 0.5 + 1e-12);
    let mut sum = 0.0f64;
    let mut tk = t * t; // t^k starting at k = 2
    let mut sign = 1.0;
    for (i, zm1) in ZETA_M1.iter().enumerate() {
        let k = (i + 2) as f64;
        let term = sign * zm1 * tk / k;
        sum += term;
        if term.abs() < 1e-19 {
            break;
        }
        tk *= t;
        sign = -sign;
    }
    t * (1.0 - EULER_GAMMA) + sum
}

/// Natural log of the gamma function, `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64, SpecFunError> {
    // Negated comparison on purpose: NaN must land in the error branch.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(x > 0.0) {
        return Err(SpecFunError::LogGammaNonPositiveArgument { x });
    }
    if x < 0.5 {
        // Gamma(x) = Gamma(x+2) / (x (x+1))
        Ok(ln_gamma_2p(x) - x.ln() - x.ln_1p())
    } else if x < 1.5 {
        // Gamma(x) = Gamma(x+1) / x
        Ok(ln_gamma_2p(x - 1.0) - x.ln())
    } else if x <= 2.5 {
        Ok(ln_gamma_2p(x - 2.0))
    } else if x < 10.0 {
        // Gamma(x) = (x-1)(x-2)...(y) Gamma(y) with y in (1.5, 2.5].
        let n = (x - 1.5).floor() as usize;
        let y = x - n as f64;
        let mut logs = Dd::from(ln_gamma_2p(y - 2.0));
        for j in 0..n {
            logs = logs.add_f64((y + j as f64).ln());
        }
        Ok(logs.to_f64())
    } else {
        // Stirling: B_{2k} / (2k(2k-1) x^{2k-1}), k = 1..=8.
        const STIRLING: [f64; 8] = [
            1.0 / 12.0,
            -1.0 / 360.0,
            1.0 / 1260.0,
            -1.0 / 1680.0,
            1.0 / 1188.0,
            -691.0 / 360360.0,
            1.0 / 156.0,
            -3617.0 / 122400.0,
        ];
        let inv_x2 = 1.0 / (x * x);
        let mut tail = 0.0;
        let mut pow = 1.0 / x;
        for c in STIRLING {
            tail += c * pow;
            pow *= inv_x2;
        }
        Ok((x - 0.5) * x.ln() - x + HALF_LN_TWO_PI + tail)
    }
}

/// Gamma function, `x > 0`.
pub fn gamma(x: f64) -> Result<f64, SpecFunError> {
    Ok(ln_gamma(x)?.exp())
}

/// `1/Gamma(1+t)` for `|t| <= 0.5`, by its Taylor series.
///
/// This form is exact at t = 0 and cancellation-free, which is what the
/// Bessel K series needs when the order sits next to an integer.
pub fn inv_gamma1p(t: f64) -> f64 {
    debug_assert!(t.abs() <= 0.5 + 1e-12, "inv_gamma1p domain |t| <= 0.5, got {t}");
    let mut sum = 0.0;
    // Horner from the top coefficient down.
    for &c in INV_GAMMA1P_COEFFS.iter().rev() {
        sum = sum * t + c;
    }
    sum
}

/// The four gamma-derived quantities of the Temme K-Bessel series at order
/// `|mu| <= 1/2`:
/// `gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu)` (its mu -> 0 limit is
/// minus the Euler constant), `gam2 = (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2`, and
/// the two reciprocals themselves. The odd/even split of the Taylor series
/// computes `gam1` without subtractive cancellation.
pub(super) fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    debug_assert!(mu.abs() <= 0.5 + 1e-12);
    let gampl = inv_gamma1p(mu);
    let gammi = inv_gamma1p(-mu);
    let mu2 = mu * mu;
    let mut gam1 = 0.0;
    let mut gam2 = 0.0;
    let mut even_pow = 1.0; // mu^k for even k
    for k in (0..INV_GAMMA1P_COEFFS.len()).step_by(2) {
        gam2 += INV_GAMMA1P_COEFFS[k] * even_pow;
        if k + 1 < INV_GAMMA1P_COEFFS.len() {
            // Odd-k coefficient contributes -g_k mu^{k-1} to gam1.
            gam1 -= INV_GAMMA1P_COEFFS[k + 1] * even_pow;
        }
        even_pow *= mu2;
    }
    (gam1, gam2, gampl, gammi)
}
