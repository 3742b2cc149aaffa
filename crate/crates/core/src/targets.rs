//! Target gate families, their parameter domains, and uniform sampling.
//!
//! A family maps a parameter vector drawn from a box-shaped domain to a
//! target unitary. Training may sample from a symmetrically inflated copy
//! of the box (curing edge-of-domain infidelity); held-out evaluation
//! always uses the uninflated domain.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{expm_hermitian, pauli_product, Axis, CMat};

/// Box-shaped parameter domain, one `[lo, hi]` interval per axis (radians).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDomain {
    pub axes: Vec<[f64; 2]>,
}

impl ParamDomain {
    pub fn new(axes: Vec<[f64; 2]>) -> Result<Self> {
        for (k, a) in axes.iter().enumerate() {
            if !(a[0].is_finite() && a[1].is_finite() && a[0] <= a[1]) {
                return Err(Error::InvalidConfig(format!(
                    "domain axis {k} has invalid bounds {a:?}"
                )));
            }
        }
        Ok(Self { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Enlarge every axis symmetrically about its midpoint by `fraction`.
    pub fn inflated(&self, fraction: f64) -> Self {
        let axes = self
            .axes
            .iter()
            .map(|&[lo, hi]| {
                let mid = 0.5 * (lo + hi);
                let half = 0.5 * (hi - lo) * (1.0 + fraction);
                [mid - half, mid + half]
            })
            .collect();
        Self { axes }
    }

    pub fn contains(&self, alpha: &[f64], tol: f64) -> bool {
        alpha.len() == self.dim()
            && alpha
                .iter()
                .zip(&self.axes)
                .all(|(&a, &[lo, hi])| a >= lo - tol && a <= hi + tol)
    }
}

/// One parameter draw, tagged with its position in the stream it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSample {
    pub alpha: Vec<f64>,
    pub lineage: u64,
}

/// Which copy of the domain a sampler draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainChoice {
    /// Inflated box; used for training batches.
    Training,
    /// Uninflated box; used for held-out evaluation and baselines.
    Evaluation,
}

/// One term of a custom family: `exp(-i theta(alpha) P)` with `P` a Pauli
/// product (`"z:1 z:2"` style) and `theta` affine in the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomTerm {
    pub pauli: String,
    #[serde(default)]
    pub offset: f64,
    pub coeffs: Vec<f64>,
}

/// Custom family: an ordered product of Pauli-product exponentials
/// (first term leftmost in the matrix product).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomFamilySpec {
    pub qubits: usize,
    pub domain: Vec<[f64; 2]>,
    pub terms: Vec<CustomTerm>,
}

/// Family selection as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub name: String,
    #[serde(default)]
    pub inflation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomFamilySpec>,
}

impl FamilySpec {
    pub fn builtin(name: &str) -> Self {
        Self { name: name.to_string(), inflation: 0.0, custom: None }
    }

    pub fn build(&self) -> Result<TargetFamily> {
        if self.inflation < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "domain inflation {} must be >= 0",
                self.inflation
            )));
        }
        match (&self.custom, self.name.as_str()) {
            (Some(spec), "custom") => TargetFamily::custom(spec.clone(), self.inflation),
            (Some(_), other) => Err(Error::InvalidConfig(format!(
                "custom family definition given but name is `{other}`, not `custom`"
            ))),
            (None, name) => TargetFamily::builtin(name, self.inflation),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    /// Arbitrary single-qubit rotation `Rz(a1) Ry(a2) Rz(a3)`.
    U1,
    /// Controlled phase rotation on qubit 2.
    CtrlPhase,
    /// Two-qubit ZZ rotation `exp(-i a1 Z Z)`.
    Zz,
    /// Controlled arbitrary single-qubit rotation.
    CtrlU1,
    /// `exp(-i (a1 XX + a2 YY + a3 ZZ))`.
    XxYyZz,
    /// Three-qubit `exp(-i a1 ZZZ)`.
    Zzz,
    /// `exp(-i (a1 XXX + a2 YYY + a3 ZZZ))`.
    XxxYyyZzz,
    /// Doubly-controlled arbitrary single-qubit rotation.
    CtrlCtrlU1,
    Custom(CustomParsed),
}

#[derive(Debug, Clone, PartialEq)]
struct CustomParsed {
    dim: usize,
    terms: Vec<(CMat, f64, Vec<f64>)>,
}

/// A named family of target unitaries over a parameter box.
#[derive(Debug, Clone)]
pub struct TargetFamily {
    name: String,
    kind: Kind,
    qubits: usize,
    domain: ParamDomain,
    inflation: f64,
}

/// Canonical names of the built-in families, in the order of the study.
pub const BUILTIN_FAMILIES: &[&str] = &[
    "u1",
    "ctrl-phase",
    "zz",
    "ctrl-u1",
    "xx-yy-zz",
    "zzz",
    "xxx-yyy-zzz",
    "ctrl-ctrl-u1",
];

/// Resolve roman-numeral aliases (`i`..`vii`) to canonical family names.
pub fn resolve_family_name(name: &str) -> &str {
    match name {
        "i" => "ctrl-phase",
        "ii" => "zz",
        "iii" => "ctrl-u1",
        "iv" => "xx-yy-zz",
        "v" => "zzz",
        "vi" => "xxx-yyy-zzz",
        "vii" => "ctrl-ctrl-u1",
        other => other,
    }
}

const PI: f64 = std::f64::consts::PI;

impl TargetFamily {
    pub fn builtin(name: &str, inflation: f64) -> Result<Self> {
        let canonical = resolve_family_name(name);
        let (kind, qubits, axes): (Kind, usize, Vec<[f64; 2]>) = match canonical {
            "u1" => (Kind::U1, 1, vec![[0.0, PI]; 3]),
            "ctrl-phase" => (Kind::CtrlPhase, 2, vec![[0.0, PI]]),
            "zz" => (Kind::Zz, 2, vec![[0.0, PI / 2.0]]),
            "ctrl-u1" => (Kind::CtrlU1, 2, vec![[0.0, PI]; 3]),
            "xx-yy-zz" => (Kind::XxYyZz, 2, vec![[0.0, PI / 2.0]; 3]),
            "zzz" => (Kind::Zzz, 3, vec![[0.0, PI / 2.0]]),
            "xxx-yyy-zzz" => (Kind::XxxYyyZzz, 3, vec![[0.0, PI / 2.0]; 3]),
            "ctrl-ctrl-u1" => (Kind::CtrlCtrlU1, 3, vec![[0.0, PI]; 3]),
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown target family `{other}`"
                )))
            }
        };
        Ok(Self {
            name: canonical.to_string(),
            kind,
            qubits,
            domain: ParamDomain::new(axes)?,
            inflation,
        })
    }

    pub fn custom(spec: CustomFamilySpec, inflation: f64) -> Result<Self> {
        if spec.qubits == 0 || spec.qubits > 3 {
            return Err(Error::InvalidConfig(format!(
                "custom family qubit count {} outside 1..=3",
                spec.qubits
            )));
        }
        let domain = ParamDomain::new(spec.domain.clone())?;
        let d = domain.dim();
        let mut terms = Vec::new();
        for term in &spec.terms {
            if term.coeffs.len() != d {
                return Err(Error::InvalidConfig(format!(
                    "term `{}` has {} coefficients for {d} parameters",
                    term.pauli,
                    term.coeffs.len()
                )));
            }
            let factors = parse_pauli_string(&term.pauli)?;
            let op = pauli_product(spec.qubits, &factors)?;
            terms.push((op, term.offset, term.coeffs.clone()));
        }
        Ok(Self {
            name: "custom".to_string(),
            kind: Kind::Custom(CustomParsed { dim: 1 << spec.qubits, terms }),
            qubits: spec.qubits,
            domain,
            inflation,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn param_dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    pub fn inflation(&self) -> f64 {
        self.inflation
    }

    pub fn inflated_domain(&self) -> ParamDomain {
        self.domain.inflated(self.inflation)
    }

    /// The exact target unitary for parameters `alpha`.
    pub fn target(&self, alpha: &[f64]) -> Result<CMat> {
        if !self.inflated_domain().contains(alpha, 1e-9) {
            return Err(Error::OutOfDomain { alpha: alpha.to_vec() });
        }
        Ok(self.target_unchecked(alpha))
    }

    /// Evaluator without the domain check; used by baselines probing
    /// arbitrary parameter values.
    pub fn target_unchecked(&self, alpha: &[f64]) -> CMat {
        match &self.kind {
            Kind::U1 => u1_gate(alpha[0], alpha[1], alpha[2]),
            Kind::CtrlPhase => {
                let mut m = CMat::identity(4, 4);
                m[(2, 2)] = C64::from_polar(1.0, -alpha[0]);
                m[(3, 3)] = C64::from_polar(1.0, alpha[0]);
                m
            }
            Kind::Zz => diagonal_pauli_exp(2, &[(1, Axis::Z), (2, Axis::Z)], alpha[0]),
            Kind::CtrlU1 => embed_block(4, 2, &u1_gate(alpha[0], alpha[1], alpha[2])),
            Kind::XxYyZz => {
                let h = axis_sum(2, alpha);
                expm_hermitian(&h, 1.0).expect("eigendecomposition of 4x4 Hermitian sum")
            }
            Kind::Zzz => {
                diagonal_pauli_exp(3, &[(1, Axis::Z), (2, Axis::Z), (3, Axis::Z)], alpha[0])
            }
            Kind::XxxYyyZzz => {
                let h = axis_sum(3, alpha);
                expm_hermitian(&h, 1.0).expect("eigendecomposition of 8x8 Hermitian sum")
            }
            Kind::CtrlCtrlU1 => embed_block(8, 6, &u1_gate(alpha[0], alpha[1], alpha[2])),
            Kind::Custom(parsed) => {
                let mut u = CMat::identity(parsed.dim, parsed.dim);
                for (op, offset, coeffs) in &parsed.terms {
                    let theta: f64 =
                        offset + coeffs.iter().zip(alpha).map(|(c, a)| c * a).sum::<f64>();
                    u = u * involutory_exp(op, theta);
                }
                u
            }
        }
    }
}

/// `Rz(a1) Ry(a2) Rz(a3)` with `R_s(t) = exp(-i t s / 2)`.
fn u1_gate(a1: f64, a2: f64, a3: f64) -> CMat {
    let (c, s) = ((a2 / 2.0).cos(), (a2 / 2.0).sin());
    let half_sum = (a1 + a3) / 2.0;
    let half_diff = (a1 - a3) / 2.0;
    CMat::from_row_slice(
        2,
        2,
        &[
            C64::from_polar(c, -half_sum),
            -C64::from_polar(s, -half_diff),
            C64::from_polar(s, half_diff),
            C64::from_polar(c, half_sum),
        ],
    )
}

/// Identity with `block` (2x2) embedded at rows/cols `at..at+2`.
fn embed_block(dim: usize, at: usize, block: &CMat) -> CMat {
    let mut m = CMat::identity(dim, dim);
    for r in 0..2 {
        for c in 0..2 {
            m[(at + r, at + c)] = block[(r, c)];
        }
    }
    m
}

/// `exp(-i theta P)` for a diagonal Pauli product `P` (all-Z factors).
fn diagonal_pauli_exp(n: usize, factors: &[(usize, Axis)], theta: f64) -> CMat {
    let p = pauli_product(n, factors).expect("valid Z factors");
    let dim = 1 << n;
    let mut m = CMat::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = C64::from_polar(1.0, -theta * p[(i, i)].re);
    }
    m
}

/// `a1 XX.. + a2 YY.. + a3 ZZ..` on all `n` qubits.
fn axis_sum(n: usize, alpha: &[f64]) -> CMat {
    let dim = 1 << n;
    let mut h = CMat::zeros(dim, dim);
    for (axis, &a) in [Axis::X, Axis::Y, Axis::Z].iter().zip(alpha) {
        let factors: Vec<(usize, Axis)> = (1..=n).map(|q| (q, *axis)).collect();
        h += pauli_product(n, &factors).expect("valid factors") * C64::from(a);
    }
    h
}

/// `exp(-i theta P) = cos(theta) I - i sin(theta) P` for involutory `P`.
fn involutory_exp(p: &CMat, theta: f64) -> CMat {
    let dim = p.nrows();
    CMat::identity(dim, dim) * C64::from(theta.cos()) + p * (-C64::I * theta.sin())
}

/// Parse `"z:1 x:2"` into Pauli factors.
fn parse_pauli_string(s: &str) -> Result<Vec<(usize, Axis)>> {
    let mut factors = Vec::new();
    for token in s.split_whitespace() {
        let (axis, qubit) = token.split_once(':').ok_or_else(|| {
            Error::InvalidConfig(format!("malformed Pauli factor `{token}`"))
        })?;
        let axis: Axis = axis.parse()?;
        let qubit: usize = qubit
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("malformed Pauli factor `{token}`")))?;
        factors.push((qubit, axis));
    }
    Ok(factors)
}

/// Draw `count` i.i.d. uniform samples from the family's domain.
///
/// `lineage` numbers the samples within the stream; determinism is the
/// caller's contract via the seeded `rng`.
pub fn sample_params(
    family: &TargetFamily,
    count: usize,
    rng: &mut ChaCha8Rng,
    choice: DomainChoice,
) -> Vec<ParamSample> {
    let domain = match choice {
        DomainChoice::Training => family.inflated_domain(),
        DomainChoice::Evaluation => family.domain().clone(),
    };
    (0..count)
        .map(|i| {
            let alpha = domain
                .axes
                .iter()
                .map(|&[lo, hi]| if hi > lo { rng.random_range(lo..hi) } else { lo })
                .collect();
            ParamSample { alpha, lineage: i as u64 }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{is_unitary, max_abs_diff};
    use crate::rng::{stream_rng, STREAM_EVAL};

    fn family(name: &str) -> TargetFamily {
        TargetFamily::builtin(name, 0.0).unwrap()
    }

    #[test]
    fn u1_at_origin_is_identity() {
        let u = family("u1").target(&[0.0, 0.0, 0.0]).unwrap();
        assert!(max_abs_diff(&u, &CMat::identity(2, 2)) <= 1e-15);
    }

    #[test]
    fn ctrl_phase_at_pi() {
        let u = family("ctrl-phase").target(&[PI]).unwrap();
        let mut expect = CMat::identity(4, 4);
        expect[(2, 2)] = C64::from(-1.0);
        expect[(3, 3)] = C64::from(-1.0);
        assert!(max_abs_diff(&u, &expect) <= 1e-15);
    }

    #[test]
    fn zz_at_zero_is_identity() {
        let u = family("zz").target(&[0.0]).unwrap();
        assert!(max_abs_diff(&u, &CMat::identity(4, 4)) <= 1e-15);
    }

    #[test]
    fn zzz_matches_exponential_oracle() {
        let a = PI / 4.0;
        let u = family("zzz").target(&[a]).unwrap();
        let p = pauli_product(3, &[(1, Axis::Z), (2, Axis::Z), (3, Axis::Z)]).unwrap();
        let oracle = expm_hermitian(&p, a).unwrap();
        assert!(max_abs_diff(&u, &oracle) <= 1e-12);
        assert_eq!(u[(0, 0)], C64::from_polar(1.0, -a));
        assert_eq!(u[(1, 1)], C64::from_polar(1.0, a));
    }

    #[test]
    fn all_families_identity_at_zero() {
        for name in BUILTIN_FAMILIES {
            let f = family(name);
            let origin = vec![0.0; f.param_dim()];
            let u = f.target(&origin).unwrap();
            assert!(
                max_abs_diff(&u, &CMat::identity(f.dim(), f.dim())) <= 1e-12,
                "family {name}"
            );
        }
    }

    #[test]
    fn all_families_unitary_across_domain() {
        // ~1000 random draws spread over the built-in families
        for name in BUILTIN_FAMILIES {
            let f = TargetFamily::builtin(name, 0.2).unwrap();
            let mut rng = stream_rng(3, STREAM_EVAL, 0);
            for s in sample_params(&f, 125, &mut rng, DomainChoice::Training) {
                let u = f.target(&s.alpha).unwrap();
                assert!(is_unitary(&u, 1e-10), "family {name} at {:?}", s.alpha);
            }
        }
    }

    #[test]
    fn u1_composition_in_z() {
        let f = family("u1");
        let (a, b) = (0.8, 1.9);
        let lhs = f.target(&[a, 0.0, 0.0]).unwrap() * f.target(&[0.0, 0.0, b]).unwrap();
        let rhs = f.target(&[a, 0.0, b]).unwrap();
        assert!(max_abs_diff(&lhs, &rhs) <= 1e-12);
    }

    #[test]
    fn controlled_families_embed_u1() {
        let f3 = family("ctrl-u1");
        let alpha = [0.4, 1.1, 2.0];
        let u = f3.target(&alpha).unwrap();
        let block = family("u1").target(&alpha).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert_eq!(u[(2 + r, 2 + c)], block[(r, c)]);
            }
        }
        assert_eq!(u[(0, 0)], C64::ONE);
        assert_eq!(u[(1, 1)], C64::ONE);

        let f7 = family("ctrl-ctrl-u1");
        let u = f7.target(&alpha).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert_eq!(u[(6 + r, 6 + c)], block[(r, c)]);
            }
        }
        for i in 0..6 {
            assert_eq!(u[(i, i)], C64::ONE);
        }
    }

    #[test]
    fn sampling_stays_in_box() {
        let f = family("ctrl-phase");
        let mut rng = stream_rng(5, STREAM_EVAL, 1);
        for s in sample_params(&f, 500, &mut rng, DomainChoice::Evaluation) {
            assert!(f.domain().contains(&s.alpha, 0.0));
        }
    }

    #[test]
    fn inflated_sampling_bounds() {
        // [0, pi/2] inflated by 20%: midpoint pi/4, half-width 0.25 pi * 1.2
        let f = TargetFamily::builtin("zz", 0.2).unwrap();
        let inflated = f.inflated_domain();
        assert!((inflated.axes[0][0] - (-0.05 * PI)).abs() <= 1e-15);
        assert!((inflated.axes[0][1] - 0.55 * PI).abs() <= 1e-15);
        let mut rng = stream_rng(5, STREAM_EVAL, 2);
        for s in sample_params(&f, 500, &mut rng, DomainChoice::Training) {
            assert!(inflated.contains(&s.alpha, 0.0));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let f = family("u1");
        let a = sample_params(&f, 32, &mut stream_rng(9, STREAM_EVAL, 7), DomainChoice::Training);
        let b = sample_params(&f, 32, &mut stream_rng(9, STREAM_EVAL, 7), DomainChoice::Training);
        assert_eq!(a, b);
    }

    #[test]
    fn out_of_domain_rejected() {
        let f = family("zz");
        assert!(matches!(
            f.target(&[2.0]),
            Err(Error::OutOfDomain { .. })
        ));
        // but inside the inflated domain it is fine
        let g = TargetFamily::builtin("zz", 0.2).unwrap();
        assert!(g.target(&[-0.05]).is_ok());
    }

    #[test]
    fn custom_family_reproduces_zz() {
        let spec = CustomFamilySpec {
            qubits: 2,
            domain: vec![[0.0, PI / 2.0]],
            terms: vec![CustomTerm {
                pauli: "z:1 z:2".into(),
                offset: 0.0,
                coeffs: vec![1.0],
            }],
        };
        let custom = TargetFamily::custom(spec, 0.0).unwrap();
        let builtin = family("zz");
        for a in [0.0, 0.3, 1.2] {
            let u = custom.target(&[a]).unwrap();
            let v = builtin.target(&[a]).unwrap();
            assert!(max_abs_diff(&u, &v) <= 1e-12);
        }
    }

    #[test]
    fn custom_family_validation() {
        let bad = CustomFamilySpec {
            qubits: 2,
            domain: vec![[0.0, 1.0]],
            terms: vec![CustomTerm {
                pauli: "z:1".into(),
                offset: 0.0,
                coeffs: vec![1.0, 2.0],
            }],
        };
        assert!(TargetFamily::custom(bad, 0.0).is_err());
        assert!(parse_pauli_string("q:1").is_err());
        assert!(parse_pauli_string("z1").is_err());
    }

    #[test]
    fn family_spec_roundtrip() {
        let spec = FamilySpec { name: "vii".into(), inflation: 0.2, custom: None };
        let f = spec.build().unwrap();
        assert_eq!(f.name(), "ctrl-ctrl-u1");
        assert_eq!(f.qubits(), 3);
        let json = serde_json::to_string(&spec).unwrap();
        let back: FamilySpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
}
