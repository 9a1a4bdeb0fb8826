//! Bipartite entanglement of multi-quasiboson states with respect to the
//! split into the a-constituent and b-constituent subsystems.
//!
//! A state is described by a second-quantized wavefunction Ψ({m_γ}) over
//! occupation configurations of the quasiboson modes. Its Schmidt number and
//! entanglement entropy have closed forms built from the per-mode multiplicity
//! `N_m^{m_γ}` (the number of ordered constituent multiindices): C(m, m_γ)
//! for fermionic constituents, C(m+m_γ−1, m_γ) for bosonic ones. Writing
//!
//! ```text
//! w(c) = |Ψ(c)|²·(1/m)^{Σ m_γ}·Π (m_γ!)²·Π N_m^{m_γ}   (= |Ψ(c)|²·Π φ(m_γ)!)
//! ```
//!
//! for the weight of configuration c, normalization is Σ w(c) = 1 and
//!
//! ```text
//! K = [Σ_c w(c)²/Π N_m^{m_γ}]⁻¹,    S = −Σ_c w(c)·ln(w(c)/Π N_m^{m_γ}).
//! ```
//!
//! Special cases: a Fock state (A†_α)^{m_α}|0⟩ has K = N_m^{m_α} and
//! S = ln K; n quasibosons in distinct modes have K = mⁿ, S = n·ln m; the
//! bosonic coherent-state values are series in |𝒜|² evaluated through the
//! modified Bessel and ₀F₃ functions. [`oracle_measures`] cross-validates
//! every closed form by building the state explicitly in the constituent
//! Fock spaces and reading K and S off the singular values.

use std::collections::BTreeMap;

use num::BigUint;
use num::ToPrimitive;
use num_complex::Complex64;
use serde_json::json;

use crate::algebra::{rational_to_f64, DeformationSpec, QuasibosonSystem};
use crate::entanglement::{schmidt_spectrum, SchmidtSpectrum};
use crate::error::{Error, Result};
use crate::fock::StateVector;
use crate::phi::{PhiFamily, UnitarySpec};
use crate::special::{bessel_i_reduced, hyper_0f3, sum_series};

/// Normalized tail mass below which the coherent series is truncated when an
/// explicit wavefunction is materialized.
pub const COHERENT_TAIL_TOLERANCE: f64 = 1e-12;

/// Largest allowed normalization residual of a wavefunction fed to the
/// closed-form measures.
pub const WAVEFUNCTION_NORM_TOLERANCE: f64 = 1e-8;

/// Occupation numbers of the quasiboson modes; absent labels mean zero.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OccupationConfig(BTreeMap<String, u32>);

impl OccupationConfig {
    /// Zero-occupation entries are dropped so equal configs compare equal.
    pub fn new(occupations: impl IntoIterator<Item = (String, u32)>) -> Self {
        OccupationConfig(
            occupations
                .into_iter()
                .filter(|&(_, n)| n > 0)
                .collect(),
        )
    }

    pub fn vacuum() -> Self {
        OccupationConfig(BTreeMap::new())
    }

    pub fn occupation(&self, label: &str) -> u32 {
        self.0.get(label).copied().unwrap_or(0)
    }

    pub fn total_quanta(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.0.iter().map(|(label, &n)| (label.as_str(), n))
    }
}

/// Second-quantized wavefunction: amplitudes over occupation configurations
/// of a fixed mode set, for one deformation (ε, m).
#[derive(Debug, Clone)]
pub struct Wavefunction {
    spec: DeformationSpec,
    modes: Vec<String>,
    amplitudes: Vec<(OccupationConfig, Complex64)>,
}

impl Wavefunction {
    /// Rejects duplicate configurations, labels outside the mode set, and —
    /// for fermionic constituents — occupations above m (the mode operators
    /// are nilpotent of order m+1).
    pub fn new(
        spec: DeformationSpec,
        modes: Vec<String>,
        amplitudes: Vec<(OccupationConfig, Complex64)>,
    ) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Parameter("wavefunction needs at least one mode".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (config, _) in &amplitudes {
            for (label, occupation) in config.iter() {
                if !modes.iter().any(|m| m == label) {
                    return Err(Error::Parameter(format!(
                        "configuration uses unknown mode label `{label}`"
                    )));
                }
                if spec.epsilon == 1 && occupation > spec.m {
                    return Err(Error::Parameter(format!(
                        "occupation {occupation} exceeds m = {} for fermionic constituents",
                        spec.m
                    )));
                }
            }
            if !seen.insert(config.clone()) {
                return Err(Error::Parameter("duplicate configuration in wavefunction".into()));
            }
        }
        Ok(Wavefunction {
            spec,
            modes,
            amplitudes,
        })
    }

    /// Normalized Fock state of one mode, amplitude [φ(m_α)!]^{−1/2}.
    pub fn fock(spec: DeformationSpec, occupation: u32) -> Result<Self> {
        let norm = rational_to_f64(&spec.phi_factorial(u64::from(occupation)));
        if norm == 0.0 {
            return Err(Error::Parameter(format!(
                "Fock state with occupation {occupation} vanishes (φ-factorial is zero)"
            )));
        }
        let amp = Complex64::new(1.0 / norm.sqrt(), 0.0);
        Wavefunction::new(
            spec,
            vec!["alpha".into()],
            vec![(OccupationConfig::new([("alpha".into(), occupation)]), amp)],
        )
    }

    /// `A†_{γ1}···A†_{γn}|0⟩` with all n quasibosons in distinct modes
    /// (already normalized: every φ(1)! = 1).
    pub fn distinct_modes(spec: DeformationSpec, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("need at least one quasiboson".into()));
        }
        let modes: Vec<String> = (1..=n).map(|i| format!("g{i}")).collect();
        let config = OccupationConfig::new(modes.iter().map(|m| (m.clone(), 1u32)));
        Wavefunction::new(spec, modes, vec![(config, Complex64::new(1.0, 0.0))])
    }

    pub fn spec(&self) -> DeformationSpec {
        self.spec
    }

    pub fn modes(&self) -> &[String] {
        &self.modes
    }

    pub fn amplitudes(&self) -> &[(OccupationConfig, Complex64)] {
        &self.amplitudes
    }

    pub fn max_total_quanta(&self) -> u32 {
        self.amplitudes
            .iter()
            .map(|(c, _)| c.total_quanta())
            .max()
            .unwrap_or(0)
    }

    /// Per-mode degrees of one configuration, in mode-list order.
    pub fn degrees(&self, config: &OccupationConfig) -> Vec<u32> {
        self.modes.iter().map(|m| config.occupation(m)).collect()
    }

    /// |Σ |Ψ(c)|²·Π φ(m_γ)! − 1|, the deviation from unit norm.
    pub fn norm_residual(&self) -> f64 {
        let total: f64 = self
            .amplitudes
            .iter()
            .map(|(config, amp)| {
                let phi_product: f64 = config
                    .iter()
                    .map(|(_, n)| rational_to_f64(&self.spec.phi_factorial(u64::from(n))))
                    .product();
                amp.norm_sqr() * phi_product
            })
            .sum();
        (total - 1.0).abs()
    }

    /// Rescale so the norm residual vanishes.
    pub fn renormalized(&self) -> Result<Self> {
        let total: f64 = self
            .amplitudes
            .iter()
            .map(|(config, amp)| {
                let phi_product: f64 = config
                    .iter()
                    .map(|(_, n)| rational_to_f64(&self.spec.phi_factorial(u64::from(n))))
                    .product();
                amp.norm_sqr() * phi_product
            })
            .sum();
        if total <= 0.0 {
            return Err(Error::ZeroState);
        }
        let scale = Complex64::new(1.0 / total.sqrt(), 0.0);
        Wavefunction::new(
            self.spec,
            self.modes.clone(),
            self.amplitudes
                .iter()
                .map(|(c, a)| (c.clone(), a * scale))
                .collect(),
        )
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "epsilon": self.spec.epsilon,
            "m": self.spec.m,
            "modes": self.modes,
            "amplitudes": self.amplitudes.iter().map(|(config, amp)| json!({
                "config": config.iter().map(|(l, n)| (l.to_string(), n)).collect::<BTreeMap<_, _>>(),
                "re": amp.re,
                "im": amp.im,
            })).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let epsilon = value
            .get("epsilon")
            .and_then(|v| v.as_i64())
            .ok_or_else(|| Error::Json("missing integer field `epsilon`".into()))? as i32;
        let m = value
            .get("m")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Json("missing integer field `m`".into()))? as u32;
        let spec = DeformationSpec::new(epsilon, m)?;
        let modes: Vec<String> = value
            .get("modes")
            .and_then(|v| v.as_array())
            .ok_or_else(|| Error::Json("missing array field `modes`".into()))?
            .iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| Error::Json("mode labels must be strings".into()))
            })
            .collect::<Result<_>>()?;
        let amps = value
            .get("amplitudes")
            .and_then(|v| v.as_array())
            .ok_or_else(|| Error::Json("missing array field `amplitudes`".into()))?;
        let mut amplitudes = Vec::with_capacity(amps.len());
        for entry in amps {
            let config = entry
                .get("config")
                .and_then(|v| v.as_object())
                .ok_or_else(|| Error::Json("amplitude entry needs a `config` object".into()))?;
            let occupations = config
                .iter()
                .map(|(label, n)| {
                    n.as_u64()
                        .map(|n| (label.clone(), n as u32))
                        .ok_or_else(|| Error::Json("occupations must be nonnegative integers".into()))
                })
                .collect::<Result<Vec<_>>>()?;
            let re = entry.get("re").and_then(|v| v.as_f64()).unwrap_or(0.0);
            let im = entry.get("im").and_then(|v| v.as_f64()).unwrap_or(0.0);
            amplitudes.push((OccupationConfig::new(occupations), Complex64::new(re, im)));
        }
        Wavefunction::new(spec, modes, amplitudes)
    }
}

/// Number of ordered constituent multiindices behind `(A†)^{m_γ}`:
/// C(m, m_γ) for ε = +1 (strictly increasing indices), C(m+m_γ−1, m_γ) for
/// ε = −1 (nondecreasing indices).
pub fn multiplicity(m: u32, m_gamma: u32, epsilon: i32) -> Result<u128> {
    DeformationSpec::new(epsilon, m)?;
    let value = if epsilon == 1 {
        if m_gamma > m {
            return Err(Error::Parameter(format!(
                "occupation {m_gamma} exceeds m = {m}: fermionic modes are nilpotent of order m+1"
            )));
        }
        num::integer::binomial(BigUint::from(m), BigUint::from(m_gamma))
    } else {
        num::integer::binomial(BigUint::from(m + m_gamma - 1), BigUint::from(m_gamma))
    };
    value
        .to_u128()
        .ok_or_else(|| Error::Parameter("multiplicity exceeds u128".into()))
}

/// Configuration weight pieces: `(q, n)` with `q = (1/m)^{Σm_γ}·Π (m_γ!)²`
/// and `n = Π N_m^{m_γ}`, both exact until the final f64 conversion.
fn config_weight(spec: DeformationSpec, config: &OccupationConfig) -> Result<(f64, f64)> {
    let mut q = num::BigRational::from(num::BigInt::from(1));
    let mut n = BigUint::from(1u32);
    for (_, occupation) in config.iter() {
        let mut fact = num::BigInt::from(1);
        for k in 1..=u64::from(occupation) {
            fact *= num::BigInt::from(k);
        }
        q *= num::BigRational::new(
            &fact * &fact,
            num::BigInt::from(spec.m).pow(occupation),
        );
        n *= BigUint::from(multiplicity(spec.m, occupation, spec.epsilon)?);
    }
    Ok((
        rational_to_f64(&q),
        n.to_f64().ok_or_else(|| Error::Parameter("multiplicity exceeds f64".into()))?,
    ))
}

/// Schmidt number and entanglement entropy (nats) of a general
/// multi-quasiboson wavefunction, from the closed forms.
pub fn general_state_measures(psi: &Wavefunction) -> Result<(f64, f64)> {
    let residual = psi.norm_residual();
    if residual > WAVEFUNCTION_NORM_TOLERANCE {
        return Err(Error::Validation(format!(
            "wavefunction norm residual {residual:.3e} exceeds {WAVEFUNCTION_NORM_TOLERANCE:.0e}"
        )));
    }
    let spec = psi.spec();
    let mut inverse_k = 0.0f64;
    let mut entropy = 0.0f64;
    for (config, amp) in psi.amplitudes() {
        let p = amp.norm_sqr();
        if p == 0.0 {
            continue;
        }
        let (q, n) = config_weight(spec, config)?;
        inverse_k += p * p * q * q * n;
        let w = p * q * n;
        entropy -= w * (p * q).ln();
    }
    Ok((1.0 / inverse_k, entropy))
}

/// Measures of the Fock state `(A†_α)^{m_α}|0⟩`: K equals the multiplicity
/// and S = ln K.
pub fn fock_state_measures(m: u32, occupation: u32, epsilon: i32) -> Result<(f64, f64)> {
    let k = multiplicity(m, occupation, epsilon)? as f64;
    Ok((k, k.ln()))
}

/// Measures of n quasibosons in distinct modes: K = mⁿ and S = n·ln m for
/// either statistics.
pub fn distinct_modes_measures(m: u32, n: u32) -> Result<(f64, f64)> {
    if m == 0 || n == 0 {
        return Err(Error::Parameter("need m ≥ 1 and n ≥ 1".into()));
    }
    Ok((f64::from(m).powi(n as i32), f64::from(n) * f64::from(m).ln()))
}

/// Coherent-state parameters: eigenvalue 𝒜 of the mode annihilator and the
/// block size m. Coherent states exist only for bosonic constituents, so
/// ε = −1 throughout.
#[derive(Debug, Clone, Copy)]
pub struct CoherentParams {
    pub amplitude: Complex64,
    pub m: u32,
}

impl CoherentParams {
    pub fn new(amplitude: Complex64, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::Parameter("m must be at least 1".into()));
        }
        Ok(CoherentParams { amplitude, m })
    }

    pub fn spec(&self) -> DeformationSpec {
        DeformationSpec::new(-1, self.m).expect("bosonic spec")
    }

    /// φ(n) = n·(m+n−1)/m for the bosonic deformation, in f64.
    fn phi(&self, n: u32) -> f64 {
        f64::from(n) * f64::from(self.m + n - 1) / f64::from(self.m)
    }

    /// Terms of Σ_n |𝒜|^{2n}/φ(n)!, the squared inverse normalization.
    fn norm_series_terms(&self) -> impl Iterator<Item = f64> + '_ {
        let x = self.amplitude.norm_sqr();
        std::iter::successors(Some((1.0f64, 0u32)), move |&(t, n)| {
            Some((t * x / self.phi(n + 1), n + 1))
        })
        .map(|(t, _)| t)
    }
}

/// Normalization constant C̃ of the coherent state, by two routes.
#[derive(Debug, Clone, Copy)]
pub struct CoherentNormalization {
    /// The Bessel closed form `[(m−1)!·I_{m−1}(z)/(z/2)^{m−1}]^{−1/2}` with
    /// z = 2√m·|𝒜|.
    pub value: f64,
    pub series_route: f64,
    pub bessel_route: f64,
    pub route_deviation: f64,
    pub series_terms: usize,
}

/// Evaluate C̃ through the Bessel closed form and confirm the direct series
/// `(Σ |𝒜|^{2n}/φ(n)!)^{−1/2}` agrees to 1e-10 relative.
pub fn coherent_normalization(params: &CoherentParams) -> Result<CoherentNormalization> {
    let z = 2.0 * f64::from(params.m).sqrt() * params.amplitude.norm();
    let mut factorial = 1.0f64;
    for k in 1..params.m {
        factorial *= f64::from(k);
    }
    let bessel_route = (factorial * bessel_i_reduced(params.m - 1, z)?).powf(-0.5);

    let series = sum_series(params.norm_series_terms())?;
    let series_route = series.value.powf(-0.5);

    let route_deviation = (series_route - bessel_route).abs() / bessel_route;
    if route_deviation > 1e-10 {
        return Err(Error::Validation(format!(
            "normalization routes disagree by {route_deviation:.3e}"
        )));
    }
    Ok(CoherentNormalization {
        value: bessel_route,
        series_route,
        bessel_route,
        route_deviation,
        series_terms: series.terms_used,
    })
}

/// Schmidt number of the coherent state, by two routes.
#[derive(Debug, Clone, Copy)]
pub struct CoherentSchmidtNumber {
    /// `C̃⁻⁴ / ₀F₃(m, m, m; |𝒜|⁴m²)`.
    pub value: f64,
    pub hypergeometric_route: f64,
    pub binomial_route: f64,
    pub route_deviation: f64,
}

/// Evaluate K = C̃⁻⁴/₀F₃(m,m,m;|𝒜|⁴m²) and confirm the explicit binomial sum
/// `C̃⁻⁴·[Σ_n (C(n+m−1, n))⁻³·(|𝒜|²m)^{2n}/(n!)⁴]⁻¹` agrees to 1e-10.
pub fn coherent_k(params: &CoherentParams) -> Result<CoherentSchmidtNumber> {
    let norm = coherent_normalization(params)?;
    let c4 = norm.value.powi(-4);
    let x = params.amplitude.norm_sqr();
    let m = f64::from(params.m);

    let hypergeometric_route = c4 / hyper_0f3(m, m, m, x * x * m * m)?;

    // u_n = (|𝒜|²m)ⁿ/(n!)², so the summand is u_n²/C(n+m−1, n)³
    let terms = std::iter::successors(Some((1.0f64, 0u64)), move |&(u, n)| {
        let nf = (n + 1) as f64;
        Some((u * x * m / (nf * nf), n + 1))
    })
    .map(|(u, n)| {
        let binom = num::integer::binomial(
            BigUint::from(n + u64::from(params.m) - 1),
            BigUint::from(n),
        )
        .to_f64()
        .expect("binomial fits in f64");
        u * u / binom.powi(3)
    });
    let binomial_route = c4 / sum_series(terms)?.value;

    let route_deviation =
        (hypergeometric_route - binomial_route).abs() / hypergeometric_route;
    if route_deviation > 1e-10 {
        return Err(Error::Validation(format!(
            "Schmidt-number routes disagree by {route_deviation:.3e}"
        )));
    }
    Ok(CoherentSchmidtNumber {
        value: hypergeometric_route,
        hypergeometric_route,
        binomial_route,
        route_deviation,
    })
}

/// Large-m leading behaviour `K ≈ e^{2|𝒜|²}·(1 − 2|𝒜|⁴/m)`; the first
/// neglected correction is of relative size |𝒜|⁴/(m(m+1)).
pub fn coherent_k_leading_order(params: &CoherentParams) -> f64 {
    let x = params.amplitude.norm_sqr();
    (2.0 * x).exp() * (1.0 - 2.0 * x * x / f64::from(params.m))
}

/// Entanglement entropy of the coherent state and the series effort.
#[derive(Debug, Clone, Copy)]
pub struct CoherentEntropy {
    pub value: f64,
    pub series_terms: usize,
}

/// `S = C̃²·Σ_n a_n·ln[(n!)²·C(n+m−1,n)²/(C̃²·(|𝒜|²m)ⁿ)]` with
/// `a_n = (|𝒜|²m)ⁿ/((n!)²·C(n+m−1,n))`; vanishing terms contribute zero.
pub fn coherent_entropy(params: &CoherentParams) -> Result<CoherentEntropy> {
    let norm = coherent_normalization(params)?;
    let c2 = norm.value * norm.value;
    let x = params.amplitude.norm_sqr();
    let m = f64::from(params.m);

    let terms = std::iter::successors(Some((1.0f64, 0u64)), move |&(u, n)| {
        let nf = (n + 1) as f64;
        Some((u * x * m / (nf * nf), n + 1))
    })
    .map(|(u, n)| {
        if u == 0.0 {
            return 0.0;
        }
        let binom = num::integer::binomial(
            BigUint::from(n + u64::from(params.m) - 1),
            BigUint::from(n),
        )
        .to_f64()
        .expect("binomial fits in f64");
        // a_n = u_n / C, log argument = C²/(u_n·C̃²)
        (u / binom) * (2.0 * binom.ln() - u.ln() - c2.ln())
    });
    let series = sum_series(terms)?;
    Ok(CoherentEntropy {
        value: c2 * series.value,
        series_terms: series.terms_used,
    })
}

/// Small-|𝒜| expansion of the coherent entropy,
/// `|𝒜|²[1 − ½(1+|𝒜|²)|𝒜|²/m]·ln(m/|𝒜|²) + |𝒜|²[1 + (1−|𝒜|²/2)|𝒜|²/m]`.
pub fn coherent_entropy_leading_order(params: &CoherentParams) -> f64 {
    let x = params.amplitude.norm_sqr();
    if x == 0.0 {
        return 0.0;
    }
    let m = f64::from(params.m);
    x * (1.0 - 0.5 * (1.0 + x) * x / m) * (m / x).ln() + x * (1.0 + (1.0 - 0.5 * x) * x / m)
}

/// Truncate the coherent series at normalized tail mass below `tail_tol` and
/// materialize the wavefunction (amplitudes `C̃·𝒜ⁿ/φ(n)!`). Returns the
/// wavefunction and the truncation level n*.
pub fn coherent_wavefunction(
    params: &CoherentParams,
    tail_tol: f64,
) -> Result<(Wavefunction, u32)> {
    let norm = coherent_normalization(params)?;
    let total = sum_series(params.norm_series_terms())?.value;

    let mut partial = 0.0f64;
    let mut term = 1.0f64;
    let mut n_star = 0u32;
    for n in 0u32.. {
        if n > 0 {
            term *= params.amplitude.norm_sqr() / params.phi(n);
        }
        partial += term;
        if (total - partial) / total < tail_tol {
            n_star = n;
            break;
        }
        if n as usize > crate::special::SERIES_MAX_TERMS {
            return Err(Error::Convergence {
                max_terms: crate::special::SERIES_MAX_TERMS,
            });
        }
    }

    let c = Complex64::new(norm.value, 0.0);
    let mut amplitudes = Vec::with_capacity(n_star as usize + 1);
    let mut phi_fact = 1.0f64;
    let mut amp_pow = Complex64::new(1.0, 0.0);
    for n in 0..=n_star {
        if n > 0 {
            phi_fact *= params.phi(n);
            amp_pow *= params.amplitude;
        }
        let config = if n == 0 {
            OccupationConfig::vacuum()
        } else {
            OccupationConfig::new([("alpha".to_string(), n)])
        };
        amplitudes.push((config, c * amp_pow / phi_fact));
    }
    let psi = Wavefunction::new(params.spec(), vec!["alpha".into()], amplitudes)?;
    Ok((psi, n_star))
}

/// Ground-truth measures from the explicit constituent-space construction.
#[derive(Debug, Clone)]
pub struct OracleMeasures {
    pub schmidt_number: f64,
    pub entropy_nats: f64,
    /// Norm of the assembled state before the spectrum normalization.
    pub state_norm: f64,
    pub spectrum: SchmidtSpectrum,
}

/// Build `Σ_c Ψ(c)·Π_γ (A†_γ)^{m_γ}|0⟩` explicitly in the product of the
/// constituent Fock spaces, reshape a-against-b, and take K and S from the
/// singular values. Identity unitaries are used for the mode matrices.
pub fn oracle_measures(
    psi: &Wavefunction,
    d_a: usize,
    d_b: usize,
    cutoff_a: u32,
    cutoff_b: u32,
) -> Result<OracleMeasures> {
    oracle_measures_with(
        psi,
        d_a,
        d_b,
        cutoff_a,
        cutoff_b,
        &UnitarySpec::Identity,
        &UnitarySpec::Identity,
        &UnitarySpec::Identity,
    )
}

/// [`oracle_measures`] with explicit unitary choices (the measures are
/// invariant under all of them).
#[allow(clippy::too_many_arguments)]
pub fn oracle_measures_with(
    psi: &Wavefunction,
    d_a: usize,
    d_b: usize,
    cutoff_a: u32,
    cutoff_b: u32,
    u1: &UnitarySpec,
    u2: &UnitarySpec,
    blocks: &UnitarySpec,
) -> Result<OracleMeasures> {
    let spec = psi.spec();
    let needed = psi.max_total_quanta();
    if cutoff_a < needed || cutoff_b < needed {
        return Err(Error::Parameter(format!(
            "cutoffs ({cutoff_a}, {cutoff_b}) below the maximum total quanta {needed}"
        )));
    }
    let family = PhiFamily::build(
        d_a,
        d_b,
        spec.m as usize,
        psi.modes().len(),
        spec.epsilon,
        u1,
        u2,
        blocks,
    )?;
    let system = QuasibosonSystem::new(family, cutoff_a, cutoff_b)?;

    let dim = system.product().dim();
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    for (config, amp) in psi.amplitudes() {
        let degrees = psi.degrees(config);
        let monomial = system.monomial_state(&degrees)?;
        for (slot, value) in amps.iter_mut().zip(monomial.amps()) {
            *slot += amp * value;
        }
    }
    let state = StateVector::new_product(
        system.product().space_a().dim(),
        system.product().space_b().dim(),
        amps,
    )?;
    let state_norm = state.norm();
    let spectrum = schmidt_spectrum(&state.bipartite_reshape()?)?;
    let report = spectrum.report();
    Ok(OracleMeasures {
        schmidt_number: report.schmidt_number,
        entropy_nats: report.entropy_nats,
        state_norm,
        spectrum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use approx::assert_relative_eq;

    fn spec(epsilon: i32, m: u32) -> DeformationSpec {
        DeformationSpec::new(epsilon, m).unwrap()
    }

    #[test]
    fn multiplicity_values() {
        assert_eq!(multiplicity(2, 1, 1).unwrap(), 2);
        assert_eq!(multiplicity(2, 2, -1).unwrap(), 3);
        assert_eq!(multiplicity(3, 3, 1).unwrap(), 1);
        assert_eq!(multiplicity(3, 0, 1).unwrap(), 1);
        assert!(multiplicity(2, 3, 1).is_err());
    }

    #[test]
    fn fock_measures_closed_forms() {
        let (k, s) = fock_state_measures(3, 2, 1).unwrap();
        assert_abs_diff_eq!(k, 3.0, epsilon = 0.0);
        assert_abs_diff_eq!(s, 3f64.ln(), epsilon = 1e-15);

        let (k, s) = fock_state_measures(3, 2, -1).unwrap();
        assert_abs_diff_eq!(k, 6.0, epsilon = 0.0);
        assert_abs_diff_eq!(s, 6f64.ln(), epsilon = 1e-15);

        // m_α = 1 reduces to the single-quasiboson values
        for m in 1..=6 {
            for &eps in &[1, -1] {
                let (k, s) = fock_state_measures(m, 1, eps).unwrap();
                assert_abs_diff_eq!(k, f64::from(m), epsilon = 0.0);
                assert_abs_diff_eq!(s, f64::from(m).ln(), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn distinct_modes_closed_forms() {
        let (k, s) = distinct_modes_measures(2, 2).unwrap();
        assert_abs_diff_eq!(k, 4.0, epsilon = 0.0);
        assert_abs_diff_eq!(s, 2.0 * 2f64.ln(), epsilon = 1e-15);
        let (k, _) = distinct_modes_measures(5, 1).unwrap();
        assert_abs_diff_eq!(k, 5.0, epsilon = 0.0);
    }

    #[test]
    fn general_state_reduces_to_fock() {
        for &eps in &[1i32, -1] {
            for m in 1..=3u32 {
                for occupation in 0..=m.min(3) {
                    let psi = Wavefunction::fock(spec(eps, m), occupation).unwrap();
                    let (k, s) = general_state_measures(&psi).unwrap();
                    let (k0, s0) = fock_state_measures(m, occupation, eps).unwrap();
                    assert_relative_eq!(k, k0, max_relative = 1e-12);
                    assert_abs_diff_eq!(s, s0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn vacuum_wavefunction_is_separable() {
        let psi = Wavefunction::new(
            spec(-1, 2),
            vec!["alpha".into()],
            vec![(OccupationConfig::vacuum(), Complex64::new(1.0, 0.0))],
        )
        .unwrap();
        let (k, s) = general_state_measures(&psi).unwrap();
        assert_abs_diff_eq!(k, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn superposition_of_two_modes() {
        // equal weights on {m₁=1} and {m₂=1}, m = 2: K = 4, S = ln 4
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let psi = Wavefunction::new(
            spec(1, 2),
            vec!["g1".into(), "g2".into()],
            vec![
                (OccupationConfig::new([("g1".into(), 1)]), Complex64::new(r, 0.0)),
                (OccupationConfig::new([("g2".into(), 1)]), Complex64::new(r, 0.0)),
            ],
        )
        .unwrap();
        let (k, s) = general_state_measures(&psi).unwrap();
        assert_relative_eq!(k, 4.0, max_relative = 1e-12);
        assert_abs_diff_eq!(s, 4f64.ln(), epsilon = 1e-12);

        let oracle = oracle_measures(&psi, 4, 4, 2, 2).unwrap();
        assert_relative_eq!(oracle.schmidt_number, k, max_relative = 1e-8);
        assert_abs_diff_eq!(oracle.entropy_nats, s, epsilon = 1e-8);
    }

    #[test]
    fn unnormalized_wavefunction_rejected() {
        let psi = Wavefunction::new(
            spec(-1, 2),
            vec!["alpha".into()],
            vec![(
                OccupationConfig::new([("alpha".into(), 1)]),
                Complex64::new(0.5, 0.0),
            )],
        )
        .unwrap();
        assert!(matches!(
            general_state_measures(&psi),
            Err(Error::Validation(_))
        ));
        let fixed = psi.renormalized().unwrap();
        assert!(fixed.norm_residual() < 1e-14);
        assert!(general_state_measures(&fixed).is_ok());
    }

    #[test]
    fn fermionic_overoccupation_rejected() {
        let err = Wavefunction::new(
            spec(1, 2),
            vec!["alpha".into()],
            vec![(
                OccupationConfig::new([("alpha".into(), 3)]),
                Complex64::new(1.0, 0.0),
            )],
        );
        assert!(err.is_err());
    }

    #[test]
    fn coherent_normalization_values() {
        // 𝒜 = 0: only the n = 0 term
        let p = CoherentParams::new(Complex64::new(0.0, 0.0), 3).unwrap();
        let n = coherent_normalization(&p).unwrap();
        assert_abs_diff_eq!(n.value, 1.0, epsilon = 1e-15);

        // m = 1: C̃ = I₀(2|𝒜|)^{−1/2}
        let p = CoherentParams::new(Complex64::new(0.7, 0.0), 1).unwrap();
        let n = coherent_normalization(&p).unwrap();
        let i0 = crate::special::bessel_i(0, 1.4).unwrap();
        assert_relative_eq!(n.value, i0.powf(-0.5), max_relative = 1e-13);
        assert!(n.route_deviation < 1e-12);
    }

    #[test]
    fn coherent_normalization_small_amplitude_expansion() {
        // C̃ = e^{−|𝒜|²/2}·[1 + |𝒜|⁴/(4m) + …]; the first neglected term is
        // |𝒜|⁴/(4m(m+1)), so require agreement within twice that margin
        for m in 1..=6u32 {
            let p = CoherentParams::new(Complex64::new(0.1, 0.0), m).unwrap();
            let x: f64 = 0.01;
            let c = coherent_normalization(&p).unwrap().value;
            let leading = (-x / 2.0).exp() * (1.0 + x * x / (4.0 * f64::from(m)));
            let next_order = x * x / (4.0 * f64::from(m) * f64::from(m + 1));
            assert!(
                (c - leading).abs() < 2.0 * next_order,
                "m={m}: {} vs {}",
                c,
                leading
            );
        }
    }

    #[test]
    fn coherent_k_routes_and_limits() {
        let p = CoherentParams::new(Complex64::new(0.0, 0.0), 4).unwrap();
        assert_abs_diff_eq!(coherent_k(&p).unwrap().value, 1.0, epsilon = 1e-14);

        for m in 1..=6u32 {
            for &amp in &[0.1f64, 0.5, 1.0, 2.0] {
                let p = CoherentParams::new(Complex64::new(amp, 0.0), m).unwrap();
                let k = coherent_k(&p).unwrap();
                assert!(k.route_deviation < 1e-10, "m={m} amp={amp}");
                assert!(k.value >= 1.0);
            }
        }
    }

    #[test]
    fn coherent_k_large_m_asymptotics() {
        // leading form is accurate up to a relative |𝒜|⁴/(m(m+1)) correction
        let x: f64 = 0.01;
        for &m in &[5u32, 12] {
            let p = CoherentParams::new(Complex64::new(0.1, 0.0), m).unwrap();
            let k = coherent_k(&p).unwrap().value;
            let leading = coherent_k_leading_order(&p);
            let next_order = x * x / (f64::from(m) * f64::from(m + 1));
            let rel = (k - leading).abs() / k;
            assert!(rel < 1.1 * next_order, "m={m}: rel {rel:.3e}");
        }
        // far enough into the large-m regime the quoted form is 1e-6 accurate
        let p = CoherentParams::new(Complex64::new(0.1, 0.0), 12).unwrap();
        let k = coherent_k(&p).unwrap().value;
        let rel = (k - coherent_k_leading_order(&p)).abs() / k;
        assert!(rel < 1e-6, "rel {rel:.3e}");
    }

    #[test]
    fn coherent_entropy_values() {
        let p = CoherentParams::new(Complex64::new(0.0, 0.0), 2).unwrap();
        assert_abs_diff_eq!(coherent_entropy(&p).unwrap().value, 0.0, epsilon = 1e-15);

        // small-|𝒜| expansion at |𝒜| = 0.1, m = 4
        let p = CoherentParams::new(Complex64::new(0.1, 0.0), 4).unwrap();
        let s = coherent_entropy(&p).unwrap().value;
        let expansion = coherent_entropy_leading_order(&p);
        assert!(
            (s - expansion).abs() < 1e-4,
            "S = {s}, expansion = {expansion}"
        );
    }

    #[test]
    fn coherent_oracle_cross_check() {
        let p = CoherentParams::new(Complex64::new(0.5, 0.0), 2).unwrap();
        let (psi, n_star) = coherent_wavefunction(&p, COHERENT_TAIL_TOLERANCE).unwrap();
        assert!(n_star >= 5);
        assert!(psi.norm_residual() < 1e-10);

        let (k_general, s_general) = general_state_measures(&psi).unwrap();
        let k_closed = coherent_k(&p).unwrap().value;
        let s_closed = coherent_entropy(&p).unwrap().value;
        assert_relative_eq!(k_general, k_closed, max_relative = 1e-8);
        assert_abs_diff_eq!(s_general, s_closed, epsilon = 1e-8);

        let oracle = oracle_measures(&psi, 2, 2, n_star + 1, n_star + 1).unwrap();
        assert_relative_eq!(oracle.schmidt_number, k_closed, max_relative = 1e-8);
        assert_abs_diff_eq!(oracle.entropy_nats, s_closed, epsilon = 1e-8);
    }

    #[test]
    fn oracle_requires_room() {
        let psi = Wavefunction::fock(spec(-1, 2), 2).unwrap();
        assert!(oracle_measures(&psi, 2, 2, 1, 1).is_err());
        assert!(oracle_measures(&psi, 1, 1, 2, 2).is_err());
    }

    #[test]
    fn wavefunction_json_round_trip() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let psi = Wavefunction::new(
            spec(-1, 3),
            vec!["g1".into(), "g2".into()],
            vec![
                (OccupationConfig::new([("g1".into(), 2)]), Complex64::new(0.3, -0.1)),
                (OccupationConfig::new([("g2".into(), 1)]), Complex64::new(r, 0.2)),
            ],
        )
        .unwrap();
        let loaded = Wavefunction::from_json(&psi.to_json()).unwrap();
        assert_eq!(loaded.modes(), psi.modes());
        assert_eq!(loaded.amplitudes().len(), 2);
        assert_abs_diff_eq!(
            loaded.norm_residual(),
            psi.norm_residual(),
            epsilon = 1e-15
        );
    }
}
