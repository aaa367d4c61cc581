//! Multi-indices, vector powers and finite index sets.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// A multi-index α ∈ ℕⁿ.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Self {
        MultiIndex(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut v = vec![0; dim];
        v[axis] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    /// |α| = Σ αᵢ.
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    /// Componentwise α ≤ β.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// α − β when β ≤ α.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if !other.le(self) {
            return None;
        }
        Some(MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    /// α! as a float.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&a| factorial(a)).product()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&a| a as f64).collect()
    }
}

impl From<Vec<usize>> for MultiIndex {
    fn from(v: Vec<usize>) -> Self {
        MultiIndex(v)
    }
}

impl From<&[usize]> for MultiIndex {
    fn from(v: &[usize]) -> Self {
        MultiIndex(v.to_vec())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Univariate binomial coefficient in exact integer arithmetic.
pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Multi-index binomial ∏ C(αᵢ, βᵢ); zero unless β ≤ α.
pub fn mi_binomial(alpha: &MultiIndex, beta: &MultiIndex) -> Result<u128> {
    if alpha.dim() != beta.dim() {
        return Err(Error::DimensionMismatch { expected: alpha.dim(), got: beta.dim() });
    }
    let mut acc: u128 = 1;
    for (&a, &b) in alpha.entries().iter().zip(beta.entries()) {
        let c = binomial(a, b).ok_or(Error::Overflow("mi_binomial"))?;
        acc = acc.checked_mul(c).ok_or(Error::Overflow("mi_binomial"))?;
    }
    Ok(acc)
}

/// a^b = ∏ aᵢ^bᵢ with the convention 0⁰ = 1.
pub fn vec_pow(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    let mut acc = 1.0;
    for (&x, &e) in a.iter().zip(b) {
        if e == 0.0 {
            continue;
        }
        if x == 0.0 && e < 0.0 {
            return Err(Error::ZeroToNegativePower);
        }
        acc *= x.powf(e);
    }
    Ok(acc)
}

/// A finite set of multi-indices of a fixed dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSet {
    dim: usize,
    members: BTreeSet<MultiIndex>,
}

impl IndexSet {
    pub fn new(dim: usize) -> Self {
        IndexSet { dim, members: BTreeSet::new() }
    }

    pub fn from_indices<I: IntoIterator<Item = MultiIndex>>(dim: usize, items: I) -> Result<Self> {
        let mut s = IndexSet::new(dim);
        for m in items {
            s.insert(m)?;
        }
        Ok(s)
    }

    /// {α : |α| ≤ d}.
    pub fn total_degree(dim: usize, d: usize) -> Self {
        let mut s = IndexSet::new(dim);
        for m in box_indices(&vec![d; dim]) {
            if m.order() <= d {
                s.members.insert(m);
            }
        }
        s
    }

    /// {α : α ≤ d} (tensor degree).
    pub fn tensor_degree(degree: &[usize]) -> Self {
        let mut s = IndexSet::new(degree.len());
        s.members.extend(box_indices(degree));
        s
    }

    pub fn insert(&mut self, m: MultiIndex) -> Result<()> {
        if m.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: m.dim() });
        }
        self.members.insert(m);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, m: &MultiIndex) -> bool {
        self.members.contains(m)
    }

    pub fn iter(&self) -> impl Iterator<Item = &MultiIndex> {
        self.members.iter()
    }

    pub fn is_downward_closed(&self) -> bool {
        self.members.iter().all(|m| {
            (0..self.dim).all(|i| {
                if m.entries()[i] == 0 {
                    return true;
                }
                let mut v = m.entries().to_vec();
                v[i] -= 1;
                self.members.contains(&MultiIndex(v))
            })
        })
    }

    /// Componentwise maximum over the set (zero for the empty set).
    pub fn max_componentwise(&self) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for m in &self.members {
            for (o, &a) in out.iter_mut().zip(m.entries()) {
                *o = (*o).max(a);
            }
        }
        out
    }

    pub fn max_order(&self) -> usize {
        self.members.iter().map(MultiIndex::order).max().unwrap_or(0)
    }
}

/// All multi-indices α with α ≤ bound, in lexicographic order.
pub fn box_indices(bound: &[usize]) -> Vec<MultiIndex> {
    let n = bound.len();
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    loop {
        out.push(MultiIndex(cur.clone()));
        let mut axis = n;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            if cur[axis] < bound[axis] {
                cur[axis] += 1;
                for c in cur.iter_mut().skip(axis + 1) {
                    *c = 0;
                }
                break;
            }
        }
    }
}

/// A − σ = {α − σ : α ∈ A, α ≥ σ}.
pub fn index_set_translate(a: &IndexSet, sigma: &MultiIndex) -> Result<IndexSet> {
    if sigma.dim() != a.dim {
        return Err(Error::DimensionMismatch { expected: a.dim, got: sigma.dim() });
    }
    let mut out = IndexSet::new(a.dim);
    for m in &a.members {
        if let Some(t) = m.checked_sub(sigma) {
            out.members.insert(t);
        }
    }
    Ok(out)
}

/// Minimal elements of ℕⁿ \ A.
pub fn index_set_base(a: &IndexSet) -> IndexSet {
    let n = a.dim;
    let mut out = IndexSet::new(n);
    if a.is_empty() {
        out.members.insert(MultiIndex::zeros(n));
        return out;
    }
    // Every minimal element of the complement is 0 or α + eᵢ with α ∈ A.
    let mut candidates: BTreeSet<MultiIndex> = BTreeSet::new();
    candidates.insert(MultiIndex::zeros(n));
    for m in &a.members {
        for i in 0..n {
            candidates.insert(m.add(&MultiIndex::unit(n, i)));
        }
    }
    for c in candidates {
        if a.contains(&c) {
            continue;
        }
        let minimal = (0..n).all(|i| {
            if c.entries()[i] == 0 {
                return true;
            }
            let mut v = c.entries().to_vec();
            v[i] -= 1;
            a.contains(&MultiIndex(v))
        });
        if minimal {
            out.members.insert(c);
        }
    }
    out
}

/// The exponent γ attached to a family of K sets, as a function of q.
#[derive(Clone, Debug, PartialEq)]
pub enum GammaSpec {
    /// γ = −1/q in every component.
    MinusInvQ,
    /// γ = −d − 1/q componentwise.
    MinusDegreeMinusInvQ(Vec<usize>),
}

impl GammaSpec {
    pub fn eval(&self, dim: usize, q: f64) -> Vec<f64> {
        let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
        match self {
            GammaSpec::MinusInvQ => vec![-inv_q; dim],
            GammaSpec::MinusDegreeMinusInvQ(d) => d.iter().map(|&di| -(di as f64) - inv_q).collect(),
        }
    }
}

/// The pair of index sets (K₀, K_σ) defining a right-hand-side seminorm.
#[derive(Clone, Debug, PartialEq)]
pub struct KSets {
    pub k0: IndexSet,
    pub k_sigma: IndexSet,
    pub gamma: GammaSpec,
}

/// Sobolev family: K₀ = {|k| = d+1}, K_σ = {k ≥ σ, |k| = d+1}.
pub fn sobolev_k(d: usize, n: usize, sigma: &MultiIndex) -> Result<KSets> {
    if sigma.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: sigma.dim() });
    }
    if sigma.order() > d {
        return Err(Error::InvalidIndex(format!("|σ| = {} exceeds d = {d}", sigma.order())));
    }
    let mut k0 = IndexSet::new(n);
    let mut ks = IndexSet::new(n);
    for m in box_indices(&vec![d + 1; n]) {
        if m.order() == d + 1 {
            if sigma.le(&m) {
                ks.members.insert(m.clone());
            }
            k0.members.insert(m);
        }
    }
    Ok(KSets { k0, k_sigma: ks, gamma: GammaSpec::MinusInvQ })
}

/// Reduced family: K₀ = {(dᵢ+1)eᵢ}, K_σ = {σ with slot i replaced by dᵢ+1}.
pub fn reduced_k(dvec: &[usize], sigma: &MultiIndex) -> Result<KSets> {
    let n = dvec.len();
    if sigma.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: sigma.dim() });
    }
    if !sigma.le(&MultiIndex(dvec.to_vec())) {
        return Err(Error::InvalidIndex(format!("σ = {sigma} exceeds the degree")));
    }
    let mut k0 = IndexSet::new(n);
    let mut ks = IndexSet::new(n);
    for i in 0..n {
        let mut e = vec![0; n];
        e[i] = dvec[i] + 1;
        k0.members.insert(MultiIndex(e));
        let mut s = sigma.entries().to_vec();
        s[i] = dvec[i] + 1;
        ks.members.insert(MultiIndex(s));
    }
    Ok(KSets { k0, k_sigma: ks, gamma: GammaSpec::MinusDegreeMinusInvQ(dvec.to_vec()) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mi(v: &[usize]) -> MultiIndex {
        MultiIndex::from(v)
    }

    fn set(dim: usize, items: &[&[usize]]) -> IndexSet {
        IndexSet::from_indices(dim, items.iter().map(|v| mi(v))).unwrap()
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(mi_binomial(&mi(&[3, 2]), &mi(&[1, 1])).unwrap(), 6);
        assert_eq!(mi_binomial(&mi(&[3, 2]), &mi(&[4, 0])).unwrap(), 0);
        assert_eq!(mi_binomial(&mi(&[5]), &mi(&[5])).unwrap(), 1);
    }

    #[test]
    fn vec_pow_examples() {
        assert_eq!(vec_pow(&[2.0, 3.0], &[1.0, 2.0]).unwrap(), 18.0);
        assert_eq!(vec_pow(&[0.0, 2.0], &[0.0, 1.0]).unwrap(), 2.0);
        assert_eq!(vec_pow(&[0.0], &[-1.0]), Err(Error::ZeroToNegativePower));
    }

    #[test]
    fn translate_example() {
        let a = IndexSet::total_degree(2, 2);
        let t = index_set_translate(&a, &mi(&[1, 0])).unwrap();
        assert_eq!(t, set(2, &[&[0, 0], &[1, 0], &[0, 1]]));
    }

    #[test]
    fn base_of_total_degree() {
        let b = index_set_base(&IndexSet::total_degree(2, 6));
        let expected: Vec<MultiIndex> = (0..=7).map(|i| mi(&[i, 7 - i])).collect();
        assert_eq!(b, IndexSet::from_indices(2, expected).unwrap());
    }

    #[test]
    fn base_of_box() {
        let b = index_set_base(&IndexSet::tensor_degree(&[4, 5]));
        assert_eq!(b, set(2, &[&[5, 0], &[0, 6]]));
    }

    #[test]
    fn base_of_l_shape() {
        let mut a = IndexSet::tensor_degree(&[3, 6]);
        for m in box_indices(&[7, 3]) {
            a.insert(m).unwrap();
        }
        assert_eq!(index_set_base(&a), set(2, &[&[8, 0], &[0, 7], &[4, 4]]));
    }

    #[test]
    fn sobolev_example() {
        let k = sobolev_k(6, 2, &mi(&[2, 3])).unwrap();
        assert_eq!(k.k_sigma, set(2, &[&[2, 5], &[3, 4], &[4, 3]]));
        assert_eq!(k.k0.len(), 8);
        assert_eq!(k.gamma.eval(2, 2.0), vec![-0.5, -0.5]);
    }

    #[test]
    fn reduced_example() {
        let k = reduced_k(&[4, 5], &mi(&[0, 0])).unwrap();
        assert_eq!(k.k0, set(2, &[&[5, 0], &[0, 6]]));
        let k = reduced_k(&[4, 5], &mi(&[3, 4])).unwrap();
        assert_eq!(k.k_sigma, set(2, &[&[5, 4], &[3, 6]]));
        assert_eq!(k.gamma.eval(2, f64::INFINITY), vec![-4.0, -5.0]);
    }

    #[test]
    fn sigma_too_large_is_rejected() {
        assert!(sobolev_k(2, 2, &mi(&[2, 1])).is_err());
        assert!(reduced_k(&[2, 2], &mi(&[3, 0])).is_err());
    }

    fn arb_downward_closed(n: usize, d: usize) -> impl Strategy<Value = IndexSet> {
        // Union of boxes is downward closed.
        proptest::collection::vec(proptest::collection::vec(0..=d, n), 1..4).prop_map(move |corners| {
            let mut s = IndexSet::new(n);
            for c in corners {
                for m in box_indices(&c) {
                    s.insert(m).unwrap();
                }
            }
            s
        })
    }

    fn exhaustive_base_check(a: &IndexSet, bound: usize) {
        let base = index_set_base(a);
        for b in base.iter() {
            assert!(!a.contains(b));
        }
        for beta in box_indices(&vec![bound; a.dim()]) {
            if !a.contains(&beta) {
                assert!(base.iter().any(|b| b.le(&beta)), "{beta} dominates no base element");
            }
        }
    }

    proptest! {
        #[test]
        fn base_properties_2d(a in arb_downward_closed(2, 6)) {
            prop_assert!(a.is_downward_closed());
            exhaustive_base_check(&a, 8);
        }

        #[test]
        fn base_properties_3d(a in arb_downward_closed(3, 4)) {
            exhaustive_base_check(&a, 6);
        }

        #[test]
        fn translate_stays_downward_closed(a in arb_downward_closed(2, 6), s0 in 0usize..4, s1 in 0usize..4) {
            let t = index_set_translate(&a, &mi(&[s0, s1])).unwrap();
            prop_assert!(t.is_downward_closed());
        }

        #[test]
        fn sobolev_k_order(d in 0usize..6, s0 in 0usize..3, s1 in 0usize..3) {
            prop_assume!(s0 + s1 <= d);
            let k = sobolev_k(d, 2, &mi(&[s0, s1])).unwrap();
            for m in k.k_sigma.iter() {
                prop_assert_eq!(m.order(), d + 1);
                prop_assert!(mi(&[s0, s1]).le(m));
                prop_assert!(k.k0.contains(m));
            }
        }
    }
}
