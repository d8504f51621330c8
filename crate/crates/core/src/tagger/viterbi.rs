use crate::bio_codec::{TagId, TagSet};
use crate::scalar::Scalar;

use super::TaggerError;

/// Which tag transitions a decoder may take.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraints {
    num_tags: usize,
    /// Row-major `prev * num_tags + next`.
    allowed: Vec<bool>,
    start: Vec<bool>,
    /// For each `next`, the ascending list of allowed `prev` tags.
    prev_lists: Vec<Vec<usize>>,
}

impl Constraints {
    pub fn new(num_tags: usize, allowed: Vec<bool>, start: Vec<bool>) -> Self {
        assert_eq!(allowed.len(), num_tags * num_tags);
        assert_eq!(start.len(), num_tags);
        let prev_lists = (0..num_tags)
            .map(|next| (0..num_tags).filter(|&p| allowed[p * num_tags + next]).collect())
            .collect();
        Self {
            num_tags,
            allowed,
            start,
            prev_lists,
        }
    }

    /// BIO constraints: no `I-x` after `O`, after another technique, or at the start.
    pub fn bio(tagset: &TagSet) -> Self {
        let start = (0..tagset.len()).map(|t| tagset.allowed(None, t as TagId)).collect();
        Self::new(tagset.len(), tagset.transition_mask(), start)
    }

    /// Every transition allowed.
    pub fn unconstrained(num_tags: usize) -> Self {
        Self::new(num_tags, vec![true; num_tags * num_tags], vec![true; num_tags])
    }

    pub fn num_tags(&self) -> usize {
        self.num_tags
    }

    pub fn allowed(&self, prev: usize, next: usize) -> bool {
        self.allowed[prev * self.num_tags + next]
    }

    pub fn start_allowed(&self, tag: usize) -> bool {
        self.start[tag]
    }

    pub fn mask(&self) -> &[bool] {
        &self.allowed
    }

    /// Whether `path` uses only permitted transitions.
    pub fn admits(&self, path: &[TagId]) -> bool {
        match path.first() {
            None => true,
            Some(&first) => {
                (first as usize) < self.num_tags
                    && self.start[first as usize]
                    && path.windows(2).all(|w| {
                        (w[1] as usize) < self.num_tags && self.allowed(w[0] as usize, w[1] as usize)
                    })
            }
        }
    }
}

/// Score of `path` under row-major `n × T` emissions and `T × T` transitions.
pub fn path_score<F: Scalar>(emissions: &[F], transitions: &[F], num_tags: usize, path: &[TagId]) -> F {
    let mut score = F::zero();
    for (i, &t) in path.iter().enumerate() {
        score += emissions[i * num_tags + t as usize];
        if i > 0 {
            score += transitions[path[i - 1] as usize * num_tags + t as usize];
        }
    }
    score
}

/// Max-sum decoding over row-major `n × T` emission scores. Forbidden
/// transitions are never taken whatever their weight; ties go to the lowest
/// tag id, both at each backpointer and at the final position.
pub fn viterbi<F: Scalar>(
    emissions: &[F],
    transitions: &[F],
    constraints: &Constraints,
) -> Result<(Vec<TagId>, F), TaggerError> {
    let t = constraints.num_tags;
    if t == 0 || emissions.is_empty() || !emissions.len().is_multiple_of(t) {
        return Err(TaggerError::EmptySequence);
    }
    debug_assert_eq!(transitions.len(), t * t);
    let n = emissions.len() / t;
    let neg = F::neg_infinity();

    let mut score: Vec<F> = (0..t)
        .map(|j| if constraints.start[j] { emissions[j] } else { neg })
        .collect();
    let mut next = vec![neg; t];
    let mut back = vec![0u32; n * t];

    for i in 1..n {
        let row = &emissions[i * t..(i + 1) * t];
        for j in 0..t {
            let mut best = neg;
            let mut arg = 0usize;
            for &p in &constraints.prev_lists[j] {
                if score[p] == neg {
                    continue;
                }
                let s = score[p] + transitions[p * t + j];
                if s > best || best == neg {
                    best = s;
                    arg = p;
                }
            }
            next[j] = if best == neg { neg } else { best + row[j] };
            back[i * t + j] = arg as u32;
        }
        std::mem::swap(&mut score, &mut next);
    }

    let mut best = neg;
    let mut last = None;
    for (j, &s) in score.iter().enumerate() {
        if s != neg && (last.is_none() || s > best) {
            best = s;
            last = Some(j);
        }
    }
    let mut tag = last.ok_or(TaggerError::NoAdmissiblePath)?;
    let mut path = vec![0 as TagId; n];
    for i in (0..n).rev() {
        path[i] = tag as TagId;
        if i > 0 {
            tag = back[i * t + tag] as usize;
        }
    }
    Ok((path, best))
}
