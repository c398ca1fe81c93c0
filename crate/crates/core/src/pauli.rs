//! Pauli-string expansion of qubit operators and qubit-wise commuting
//! measurement groups.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{tensor, ComplexMatrix, HERMITIAN_TOL};

/// Coefficients smaller than this are dropped by default.
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-9;

/// Largest qubit count `decompose` accepts (4^n strings are enumerated).
pub const MAX_DECOMPOSE_QUBITS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' | '1' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn matrix(self) -> ComplexMatrix {
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let entries = match self {
            Pauli::I => vec![one, z, z, one],
            Pauli::X => vec![z, one, one, z],
            Pauli::Y => vec![z, -i, i, z],
            Pauli::Z => vec![one, z, z, -one],
        };
        ComplexMatrix::from_row_major(2, entries).expect("2x2")
    }

    /// Flips the bit (X, Y) and returns the phase picked up from input `bit`.
    #[inline]
    fn action(self, bit: usize) -> (bool, Complex64) {
        match self {
            Pauli::I => (false, Complex64::new(1.0, 0.0)),
            Pauli::X => (true, Complex64::new(1.0, 0.0)),
            Pauli::Y if bit == 0 => (true, Complex64::new(0.0, 1.0)),
            Pauli::Y => (true, Complex64::new(0.0, -1.0)),
            Pauli::Z if bit == 0 => (false, Complex64::new(1.0, 0.0)),
            Pauli::Z => (false, Complex64::new(-1.0, 0.0)),
        }
    }
}

/// Tensor product of single-qubit Paulis; position 0 is particle 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self { letters }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            letters: vec![Pauli::I; n],
        }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    /// Number of non-identity positions.
    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn matrix(&self) -> Result<ComplexMatrix> {
        let mut acc = ComplexMatrix::identity(1);
        for p in &self.letters {
            acc = tensor(&acc, &p.matrix())?;
        }
        Ok(acc)
    }

    /// Row index and phase of `P |col>`.
    fn apply_basis(&self, col: usize) -> (usize, Complex64) {
        let n = self.letters.len();
        let mut row = col;
        let mut phase = Complex64::new(1.0, 0.0);
        for (k, p) in self.letters.iter().enumerate() {
            let shift = n - 1 - k;
            let bit = (col >> shift) & 1;
            let (flip, ph) = p.action(bit);
            if flip {
                row ^= 1 << shift;
            }
            phase *= ph;
        }
        (row, phase)
    }

    /// `Tr(P A)` in O(2^n).
    pub fn trace_with(&self, a: &ComplexMatrix) -> Result<Complex64> {
        let dim = 1usize << self.letters.len();
        if a.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: a.dim(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for col in 0..dim {
            let (row, phase) = self.apply_basis(col);
            acc += phase * a[(col, row)];
        }
        Ok(acc)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.letters {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Accepts letters from `IXYZ` (or `1` for identity), case-insensitive,
    /// optionally separated by whitespace, `*` or `⊗`.
    fn from_str(s: &str) -> Result<Self> {
        let mut letters = Vec::new();
        for c in s.chars() {
            if c.is_whitespace() || c == '⊗' || c == '*' {
                continue;
            }
            match Pauli::from_char(c) {
                Some(p) => letters.push(p),
                None => {
                    return Err(Error::Parse(format!(
                        "invalid Pauli letter {c:?} in {s:?}"
                    )))
                }
            }
            if letters.len() > 64 {
                return Err(Error::Parse("Pauli string longer than 64 letters".into()));
            }
        }
        if letters.is_empty() {
            return Err(Error::Parse("empty Pauli string".into()));
        }
        Ok(Self { letters })
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// True when every position holds equal letters or at least one identity.
pub fn qwc(p: &PauliString, q: &PauliString) -> bool {
    p.len() == q.len()
        && p
            .letters
            .iter()
            .zip(&q.letters)
            .all(|(&a, &b)| a == b || a == Pauli::I || b == Pauli::I)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub pauli: PauliString,
    pub coefficient: f64,
}

/// Real expansion `sum_P c_P P` of a Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliDecomposition {
    pub n: usize,
    /// Lexicographic in `I < X < Y < Z`, identity first when present.
    pub terms: Vec<PauliTerm>,
    pub zero_threshold: f64,
}

impl PauliDecomposition {
    pub fn identity_coefficient(&self) -> f64 {
        self.terms
            .iter()
            .find(|t| t.pauli.is_identity())
            .map_or(0.0, |t| t.coefficient)
    }

    /// Indices of the terms that must actually be measured.
    pub fn measured_indices(&self) -> Vec<usize> {
        (0..self.terms.len())
            .filter(|&i| !self.terms[i].pauli.is_identity())
            .collect()
    }

    pub fn reconstruct(&self) -> Result<ComplexMatrix> {
        let dim = 1usize << self.n;
        let mut acc = ComplexMatrix::zeros(dim);
        for t in &self.terms {
            acc = acc.add(&t.pauli.matrix()?.scale(Complex64::new(t.coefficient, 0.0)))?;
        }
        Ok(acc)
    }
}

/// Expands a Hermitian `2^n x 2^n` operator, keeping `|c_P| >= zero_threshold`.
pub fn decompose(op: &ComplexMatrix, n: usize, zero_threshold: f64) -> Result<PauliDecomposition> {
    if n == 0 || n > MAX_DECOMPOSE_QUBITS {
        return Err(Error::Unsupported(format!(
            "Pauli decomposition supports 1..={MAX_DECOMPOSE_QUBITS} qubits, got {n}"
        )));
    }
    let dim = 1usize << n;
    if op.dim() != dim {
        return Err(Error::Unsupported(format!(
            "operator dimension {} is not 2^{n} = {dim}; only qubit operators decompose into Pauli strings",
            op.dim()
        )));
    }
    let deviation = op.hermitian_deviation();
    if deviation >= HERMITIAN_TOL * op.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }

    let mut terms = Vec::new();
    let mut letters = vec![Pauli::I; n];
    for code in 0..(1usize << (2 * n)) {
        for (k, slot) in letters.iter_mut().enumerate() {
            *slot = Pauli::ALL[(code >> (2 * (n - 1 - k))) & 3];
        }
        let pauli = PauliString::new(letters.clone());
        let c = pauli.trace_with(op)? / dim as f64;
        if c.im.abs() >= 1e-10 {
            return Err(Error::InvalidState(format!(
                "coefficient of {pauli} has imaginary part {:e}",
                c.im
            )));
        }
        if c.re.abs() >= zero_threshold {
            terms.push(PauliTerm {
                pauli,
                coefficient: c.re,
            });
        }
    }
    Ok(PauliDecomposition {
        n,
        terms,
        zero_threshold,
    })
}

/// Order in which the greedy colouring visits terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VisitOrder {
    /// Decomposition order (lexicographic `I < X < Y < Z`). Reproduces the
    /// published group counts and partitions.
    #[default]
    Lexicographic,
    /// Descending conflict degree, ties broken lexicographically.
    LargestDegreeFirst,
}

/// Jointly measurable groups of decomposition terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementPlan {
    pub n: usize,
    pub identity_coefficient: f64,
    pub terms: Vec<PauliTerm>,
    /// Indices into `terms`; the identity term never appears here.
    pub groups: Vec<Vec<usize>>,
    /// One local basis per group; positions no member acts on read `Z`.
    pub shared_bases: Vec<PauliString>,
}

impl MeasurementPlan {
    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn group_strings(&self, g: usize) -> Vec<&PauliString> {
        self.groups[g].iter().map(|&i| &self.terms[i].pauli).collect()
    }

    /// Checks index ranges, the partition property, pairwise QWC and the
    /// shared bases.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.groups.len() != self.shared_bases.len() {
            return bad(format!(
                "{} groups but {} shared bases",
                self.groups.len(),
                self.shared_bases.len()
            ));
        }
        for t in &self.terms {
            if t.pauli.len() != self.n {
                return bad(format!("term {} does not act on {} qubits", t.pauli, self.n));
            }
            if !t.coefficient.is_finite() {
                return bad(format!("term {} has a non-finite coefficient", t.pauli));
            }
        }
        let mut seen = vec![false; self.terms.len()];
        for (g, members) in self.groups.iter().enumerate() {
            if members.is_empty() {
                return bad(format!("group {g} is empty"));
            }
            for &i in members {
                let Some(term) = self.terms.get(i) else {
                    return bad(format!("group {g} references missing term {i}"));
                };
                if term.pauli.is_identity() {
                    return bad(format!("group {g} contains the identity term"));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return bad(format!("term {i} appears in more than one group"));
                }
            }
            for (a, &i) in members.iter().enumerate() {
                for &j in &members[a + 1..] {
                    if !qwc(&self.terms[i].pauli, &self.terms[j].pauli) {
                        return bad(format!(
                            "group {g}: {} and {} do not commute qubit-wise",
                            self.terms[i].pauli, self.terms[j].pauli
                        ));
                    }
                }
            }
            let basis = &self.shared_bases[g];
            if basis.len() != self.n || basis.letters().contains(&Pauli::I) {
                return bad(format!("shared basis {basis} of group {g} must have {} letters from XYZ", self.n));
            }
            for &i in members {
                for (&m, &b) in self.terms[i].pauli.letters().iter().zip(basis.letters()) {
                    if m != Pauli::I && m != b {
                        return bad(format!("shared basis {basis} of group {g} does not cover {}", self.terms[i].pauli));
                    }
                }
            }
        }
        for (i, t) in self.terms.iter().enumerate() {
            if !t.pauli.is_identity() && !seen[i] {
                return bad(format!("term {} is not in any group", t.pauli));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Parses and validates a plan.
    pub fn from_json(s: &str) -> Result<Self> {
        let plan: Self = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }
}

/// Local basis covering every member of a qubit-wise commuting group.
pub fn shared_basis(n: usize, members: &[&PauliString]) -> PauliString {
    let letters = (0..n)
        .map(|k| {
            members
                .iter()
                .map(|p| p.letters()[k])
                .find(|&l| l != Pauli::I)
                .unwrap_or(Pauli::Z)
        })
        .collect();
    PauliString::new(letters)
}

/// Greedy colouring of the conflict graph (edge = not QWC) in the default
/// visit order.
pub fn group_ldfc(decomp: &PauliDecomposition) -> MeasurementPlan {
    group_with_order(decomp, VisitOrder::default())
}

/// Greedy colouring: each visited term takes the lowest colour not used by a
/// conflicting neighbour. Colours become groups in ascending order.
pub fn group_with_order(decomp: &PauliDecomposition, order: VisitOrder) -> MeasurementPlan {
    let measured = decomp.measured_indices();
    let strings: Vec<&PauliString> = measured.iter().map(|&i| &decomp.terms[i].pauli).collect();
    let v = strings.len();
    let conflicts: Vec<Vec<usize>> = (0..v)
        .map(|a| (0..v).filter(|&b| b != a && !qwc(strings[a], strings[b])).collect())
        .collect();

    let mut visit: Vec<usize> = (0..v).collect();
    if order == VisitOrder::LargestDegreeFirst {
        // stable sort keeps lexicographic order within equal degree
        visit.sort_by_key(|&a| std::cmp::Reverse(conflicts[a].len()));
    }

    let mut colour: Vec<Option<usize>> = vec![None; v];
    let mut num_colours = 0;
    for &a in &visit {
        let used: Vec<usize> = conflicts[a].iter().filter_map(|&b| colour[b]).collect();
        let c = (0..).find(|c| !used.contains(c)).expect("unbounded range");
        colour[a] = Some(c);
        num_colours = num_colours.max(c + 1);
    }

    let mut groups = vec![Vec::new(); num_colours];
    for (a, c) in colour.iter().enumerate() {
        groups[c.expect("every vertex coloured")].push(measured[a]);
    }
    let shared_bases = groups
        .iter()
        .map(|g| {
            let members: Vec<&PauliString> = g.iter().map(|&i| &decomp.terms[i].pauli).collect();
            shared_basis(decomp.n, &members)
        })
        .collect();
    MeasurementPlan {
        n: decomp.n,
        identity_coefficient: decomp.identity_coefficient(),
        terms: decomp.terms.clone(),
        groups,
        shared_bases,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(ps("1 ⊗ X ⊗ z").to_string(), "IXZ");
        assert!("IXA".parse::<PauliString>().is_err());
        assert!("".parse::<PauliString>().is_err());
    }

    #[test]
    fn trace_with_matches_dense_product() {
        let a = ComplexMatrix::from_fn(4, |r, c| Complex64::new((r + 2 * c) as f64, r as f64 - c as f64));
        for s in ["IX", "YZ", "ZY", "XX", "YY", "II"] {
            let p = ps(s);
            let dense = p.matrix().unwrap().matmul(&a).unwrap().trace();
            assert!((p.trace_with(&a).unwrap() - dense).norm() < 1e-12, "{s}");
        }
    }

    #[test]
    fn qwc_examples() {
        assert!(qwc(&ps("IIX"), &ps("IXX")));
        assert!(!qwc(&ps("XX"), &ps("YZ")));
        assert!(qwc(&ps("YZX"), &ps("YZX")));
        assert!(!qwc(&ps("XX"), &ps("XXX")));
    }

    #[test]
    fn scaled_identity_has_one_term() {
        let op = ComplexMatrix::identity(8).scale(Complex64::new(0.125, 0.0));
        let d = decompose(&op, 3, DEFAULT_ZERO_THRESHOLD).unwrap();
        assert_eq!(d.terms.len(), 1);
        assert!(d.terms[0].pauli.is_identity());
        assert!((d.terms[0].coefficient - 0.125).abs() < 1e-15);
    }

    #[test]
    fn decompose_rejects_qutrit_dimensions() {
        assert!(matches!(
            decompose(&ComplexMatrix::identity(9), 2, 1e-9),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn decompose_rejects_non_hermitian() {
        let a = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(decompose(&a, 1, 1e-9), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn commuting_family_is_one_group() {
        let terms = ["ZI", "IZ", "ZZ"]
            .iter()
            .map(|s| PauliTerm {
                pauli: ps(s),
                coefficient: 0.3,
            })
            .collect();
        let d = PauliDecomposition {
            n: 2,
            terms,
            zero_threshold: 1e-9,
        };
        let plan = group_ldfc(&d);
        assert_eq!(plan.groups, vec![vec![0, 1, 2]]);
        assert_eq!(plan.shared_bases[0].to_string(), "ZZ");
        plan.validate().unwrap();
    }

    #[test]
    fn mutually_conflicting_terms_get_separate_groups() {
        let terms = ["II", "XX", "YZ", "ZY"]
            .iter()
            .map(|s| PauliTerm {
                pauli: ps(s),
                coefficient: 0.25,
            })
            .collect();
        let d = PauliDecomposition {
            n: 2,
            terms,
            zero_threshold: 1e-9,
        };
        for order in [VisitOrder::Lexicographic, VisitOrder::LargestDegreeFirst] {
            let plan = group_with_order(&d, order);
            assert_eq!(plan.groups, vec![vec![1], vec![2], vec![3]]);
            assert_eq!(plan.identity_coefficient, 0.25);
        }
    }

    #[test]
    fn plan_validation_catches_bad_groups() {
        let terms: Vec<PauliTerm> = ["II", "XX", "YZ"]
            .iter()
            .map(|s| PauliTerm {
                pauli: ps(s),
                coefficient: 0.1,
            })
            .collect();
        let mut plan = MeasurementPlan {
            n: 2,
            identity_coefficient: 0.1,
            terms,
            groups: vec![vec![1, 2]],
            shared_bases: vec![ps("XX")],
        };
        assert!(plan.validate().is_err());
        plan.groups = vec![vec![1]];
        assert!(plan.validate().is_err(), "YZ left out");
        plan.groups = vec![vec![1], vec![2]];
        plan.shared_bases = vec![ps("XX"), ps("YZ")];
        plan.validate().unwrap();
        plan.groups = vec![vec![0], vec![1], vec![2]];
        plan.shared_bases.push(ps("ZZ"));
        assert!(plan.validate().is_err(), "identity grouped");
    }

    #[test]
    fn plan_json_round_trip() {
        let terms = ["II", "XX", "XI", "YZ"]
            .iter()
            .map(|s| PauliTerm {
                pauli: ps(s),
                coefficient: 0.2,
            })
            .collect();
        let d = PauliDecomposition {
            n: 2,
            terms,
            zero_threshold: 1e-9,
        };
        let plan = group_ldfc(&d);
        let json = plan.to_json().unwrap();
        assert!(json.contains("\"XX\""));
        assert_eq!(MeasurementPlan::from_json(&json).unwrap(), plan);
        assert!(MeasurementPlan::from_json("{\"n\": 2}").is_err());
    }
}
