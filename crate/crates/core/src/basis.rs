//! Multimode Fock space restricted by a cap on the total number of
//! excitations, and the ladder operators acting on it.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::sparse::{SparseOperator, C64};

/// Ordered mode labels plus the excitation cap. The label order fixes the
/// tensor ordering of every operator built on the layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeLayout {
    labels: Vec<String>,
    cap: usize,
    per_mode_caps: Option<Vec<usize>>,
}

impl ModeLayout {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>, cap: usize) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::InvalidLayout("at least one mode is required".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidLayout(format!("duplicate mode label `{l}`")));
            }
        }
        Ok(Self {
            labels,
            cap,
            per_mode_caps: None,
        })
    }

    /// Additionally bounds each mode's occupation. Used for convergence
    /// studies; the production path relies on the total cap alone.
    pub fn with_per_mode_caps(mut self, caps: Vec<usize>) -> Result<Self> {
        if caps.len() != self.labels.len() {
            return Err(Error::InvalidLayout(format!(
                "{} per-mode caps given for {} modes",
                caps.len(),
                self.labels.len()
            )));
        }
        self.per_mode_caps = Some(caps);
        Ok(self)
    }

    pub fn mode_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn mode_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    fn mode_cap(&self, k: usize) -> usize {
        self.per_mode_caps.as_ref().map_or(self.cap, |c| c[k].min(self.cap))
    }
}

pub type FockState = Vec<u32>;

#[derive(Debug, Clone)]
pub struct FockBasis {
    layout: ModeLayout,
    states: Vec<FockState>,
    index_of: HashMap<FockState, usize>,
}

impl FockBasis {
    /// Enumerates every occupation vector with total excitation number at
    /// most the cap, in lexicographic order of occupations.
    pub fn enumerate(layout: ModeLayout) -> Self {
        let mut states = Vec::new();
        let mut current = vec![0u32; layout.mode_count()];
        fill(&layout, 0, layout.cap, &mut current, &mut states);
        let index_of = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Self {
            layout,
            states,
            index_of,
        }
    }

    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn index_of(&self, state: &[u32]) -> Option<usize> {
        self.index_of.get(state).copied()
    }

    pub fn total_excitations(&self, index: usize) -> usize {
        self.states[index].iter().map(|&n| n as usize).sum()
    }

    /// `⟨…,n−1,…| a |…,n,…⟩ = √n`, restricted to the enumerated states.
    pub fn annihilation(&self, label: &str) -> Result<SparseOperator> {
        let k = self.layout.mode_index(label)?;
        Ok(self.annihilation_at(k))
    }

    /// Adjoint of [`Self::annihilation`]; transitions that would leave the
    /// basis are dropped.
    pub fn creation(&self, label: &str) -> Result<SparseOperator> {
        Ok(self.annihilation(label)?.adjoint())
    }

    pub fn number(&self, label: &str) -> Result<SparseOperator> {
        let k = self.layout.mode_index(label)?;
        let diag = self
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| (i, i, C64::new(s[k] as f64, 0.0)))
            .collect();
        Ok(SparseOperator::from_triplets(self.dim(), diag))
    }

    pub(crate) fn annihilation_at(&self, k: usize) -> SparseOperator {
        let mut triplets = Vec::new();
        let mut lowered = vec![0u32; self.layout.mode_count()];
        for (col, s) in self.states.iter().enumerate() {
            if s[k] == 0 {
                continue;
            }
            lowered.copy_from_slice(s);
            lowered[k] -= 1;
            if let Some(row) = self.index_of(&lowered) {
                triplets.push((row, col, C64::new((s[k] as f64).sqrt(), 0.0)));
            }
        }
        SparseOperator::from_triplets(self.dim(), triplets)
    }

    pub fn identity(&self) -> SparseOperator {
        SparseOperator::identity(self.dim())
    }
}

fn fill(layout: &ModeLayout, k: usize, remaining: usize, current: &mut Vec<u32>, out: &mut Vec<FockState>) {
    if k == layout.mode_count() {
        out.push(current.clone());
        return;
    }
    for n in 0..=remaining.min(layout.mode_cap(k)) {
        current[k] = n as u32;
        fill(layout, k + 1, remaining - n, current, out);
    }
    current[k] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    fn basis(modes: usize, cap: usize) -> FockBasis {
        let labels: Vec<String> = (0..modes).map(|i| format!("m{i}")).collect();
        FockBasis::enumerate(ModeLayout::new(labels, cap).unwrap())
    }

    /// Every vector in {0..=K}^M filtered by the total cap.
    fn brute_force_count(modes: usize, cap: usize) -> usize {
        let total = (cap + 1).pow(modes as u32);
        (0..total)
            .filter(|&code| {
                let mut c = code;
                let mut sum = 0;
                for _ in 0..modes {
                    sum += c % (cap + 1);
                    c /= cap + 1;
                }
                sum <= cap
            })
            .count()
    }

    #[test]
    fn dimension_matches_brute_force() {
        for m in 1..=6 {
            for k in 0..=6 {
                let expected = brute_force_count(m, k);
                assert_eq!(expected, binomial(m + k, k));
                assert_eq!(basis(m, k).dim(), expected, "M={m} K={k}");
            }
        }
        assert_eq!(basis(5, 5).dim(), 252);
        assert_eq!(basis(1, 0).dim(), 1);
    }

    #[test]
    fn two_modes_cap_two_order() {
        let b = basis(2, 2);
        let expected: Vec<FockState> = vec![vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 0], vec![1, 1], vec![2, 0]];
        assert_eq!(b.states(), expected.as_slice());
        for (i, s) in b.states().iter().enumerate() {
            assert_eq!(b.index_of(s), Some(i));
        }
    }

    #[test]
    fn single_mode_ladder_matrix() {
        let b = basis(1, 2);
        let a = b.annihilation("m0").unwrap().to_dense();
        let s2 = 2f64.sqrt();
        let expected = [[0.0, 1.0, 0.0], [0.0, 0.0, s2], [0.0, 0.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a[i][j], C64::new(expected[i][j], 0.0));
            }
        }
        // vacuum column is empty; a†|2⟩ is dropped at the cap
        assert!((0..3).all(|i| a[i][0] == C64::new(0.0, 0.0)));
        let ad = b.creation("m0").unwrap();
        assert!((0..3).all(|i| ad.get(i, 2) == C64::new(0.0, 0.0)));
    }

    #[test]
    fn number_operator_from_ladder() {
        let b = basis(3, 3);
        for k in 0..3 {
            let label = format!("m{k}");
            let a = b.annihilation(&label).unwrap();
            let n = b.creation(&label).unwrap().compose(&a).unwrap();
            assert!(n.sub(&b.number(&label).unwrap()).unwrap().max_abs() < 1e-14);
            for (i, s) in b.states().iter().enumerate() {
                assert!((n.get(i, i).re - s[k] as f64).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn creation_is_exact_adjoint() {
        let b = basis(4, 3);
        for k in 0..4 {
            let label = format!("m{k}");
            let a = b.annihilation(&label).unwrap();
            let ad = b.creation(&label).unwrap();
            for i in 0..b.dim() {
                for j in 0..b.dim() {
                    assert_eq!(ad.get(i, j), a.get(j, i).conj());
                }
            }
        }
    }

    #[test]
    fn canonical_commutator_below_cap() {
        let cap = 3;
        let b = basis(3, cap);
        for i in 0..3 {
            for j in 0..3 {
                let ai = b.annihilation(&format!("m{i}")).unwrap();
                let aj_dag = b.creation(&format!("m{j}")).unwrap();
                let comm = ai.compose(&aj_dag).unwrap().sub(&aj_dag.compose(&ai).unwrap()).unwrap();
                let dense = comm.to_dense();
                for (r, row) in dense.iter().enumerate() {
                    for (c, value) in row.iter().enumerate() {
                        if b.total_excitations(r) >= cap || b.total_excitations(c) >= cap {
                            continue;
                        }
                        let expected = if i == j && r == c { 1.0 } else { 0.0 };
                        assert!((value - C64::new(expected, 0.0)).norm() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn number_operators_commute() {
        let b = basis(3, 4);
        let n0 = b.number("m0").unwrap();
        let n2 = b.number("m2").unwrap();
        assert_eq!(n0.compose(&n2).unwrap(), n2.compose(&n0).unwrap());
    }

    #[test]
    fn unknown_and_duplicate_labels() {
        let b = basis(2, 1);
        assert!(matches!(b.annihilation("x"), Err(Error::UnknownMode(_))));
        assert!(ModeLayout::new(["a", "a"], 2).is_err());
    }

    #[test]
    fn per_mode_caps_restrict_states() {
        let layout = ModeLayout::new(["a", "b"], 3).unwrap().with_per_mode_caps(vec![1, 3]).unwrap();
        let b = FockBasis::enumerate(layout);
        assert!(b.states().iter().all(|s| s[0] <= 1));
        assert_eq!(b.dim(), 4 + 3);
    }
}
