//! Truncated Baker–Campbell–Hausdorff series in Dynkin form.
//!
//! Every Dynkin word is a right-nested bracket `[a_1,[a_2,...[a_{m-1},a_m]]]`
//! in the letters X and Y. Words are merged exactly in rational arithmetic,
//! then stored as a suffix tree so that shared inner brackets are evaluated
//! once per product.

use std::collections::BTreeMap;

use num_rational::Ratio;

pub(crate) const X: u8 = 0;
pub(crate) const Y: u8 = 1;

/// One node of the suffix tree: `letter` bracketed onto the node `inner`.
#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub letter: u8,
    pub inner: Option<usize>,
    pub y_count: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct BchPlan {
    /// Topologically ordered: every `inner` index precedes its parent.
    pub nodes: Vec<Node>,
    /// Final series coefficients attached to nodes.
    pub terms: Vec<(usize, f64)>,
}

fn factorial(n: usize) -> i64 {
    (1..=n as i64).product()
}

/// Merged Dynkin coefficients of all words of length `<= max_len`.
pub(crate) fn dynkin_words(max_len: usize) -> BTreeMap<Vec<u8>, Ratio<i64>> {
    let mut acc: BTreeMap<Vec<u8>, Ratio<i64>> = BTreeMap::new();
    // Enumerate sequences of (r_i, s_i) with r_i + s_i >= 1.
    fn rec(
        pairs: &mut Vec<(usize, usize)>,
        used: usize,
        max_len: usize,
        acc: &mut BTreeMap<Vec<u8>, Ratio<i64>>,
    ) {
        if !pairs.is_empty() {
            let n = pairs.len() as i64;
            let m = used as i64;
            let mut denom = n * m;
            let mut word = Vec::with_capacity(used);
            for &(r, s) in pairs.iter() {
                denom *= factorial(r) * factorial(s);
                word.extend(std::iter::repeat_n(X, r));
                word.extend(std::iter::repeat_n(Y, s));
            }
            let sign = if n % 2 == 1 { 1 } else { -1 };
            *acc.entry(word).or_insert_with(|| Ratio::from_integer(0)) +=
                Ratio::new(sign, denom);
        }
        for total in 1..=(max_len - used) {
            for r in 0..=total {
                pairs.push((r, total - r));
                rec(pairs, used + total, max_len, acc);
                pairs.pop();
            }
        }
    }
    rec(&mut Vec::new(), 0, max_len, &mut acc);

    // Canonicalize: [a,a] = 0 kills words ending in XX or YY, and
    // [Y,X] = -[X,Y] rewrites words ending in YX.
    let mut canonical: BTreeMap<Vec<u8>, Ratio<i64>> = BTreeMap::new();
    for (mut word, c) in acc {
        let len = word.len();
        let mut c = c;
        if len >= 2 {
            let (a, b) = (word[len - 2], word[len - 1]);
            if a == b {
                continue;
            }
            if a == Y {
                word[len - 2] = X;
                word[len - 1] = Y;
                c = -c;
            }
        }
        *canonical
            .entry(word)
            .or_insert_with(|| Ratio::from_integer(0)) += c;
    }
    canonical.retain(|_, c| *c != Ratio::from_integer(0));
    canonical
}

impl BchPlan {
    pub(crate) fn new(step: usize) -> Self {
        let words = dynkin_words(step);
        let mut nodes: Vec<Node> = Vec::new();
        let mut index: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
        let mut terms = Vec::new();
        // Shorter words first so inner suffixes already exist.
        let mut ordered: Vec<_> = words.into_iter().collect();
        ordered.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then(a.0.cmp(&b.0)));
        for (word, coef) in ordered {
            let id = Self::intern(&word, &mut nodes, &mut index);
            terms.push((id, *coef.numer() as f64 / *coef.denom() as f64));
        }
        Self { nodes, terms }
    }

    fn intern(word: &[u8], nodes: &mut Vec<Node>, index: &mut BTreeMap<Vec<u8>, usize>) -> usize {
        if let Some(&id) = index.get(word) {
            return id;
        }
        let inner = if word.len() > 1 {
            Some(Self::intern(&word[1..], nodes, index))
        } else {
            None
        };
        let y_count = word.iter().filter(|&&l| l == Y).count();
        nodes.push(Node {
            letter: word[0],
            inner,
            y_count,
        });
        let id = nodes.len() - 1;
        index.insert(word.to_vec(), id);
        id
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coef(words: &BTreeMap<Vec<u8>, Ratio<i64>>, w: &[u8]) -> Ratio<i64> {
        words.get(w).cloned().unwrap_or_else(|| Ratio::from_integer(0))
    }

    #[test]
    fn low_order_coefficients() {
        let w = dynkin_words(3);
        assert_eq!(coef(&w, &[X]), Ratio::from_integer(1));
        assert_eq!(coef(&w, &[Y]), Ratio::from_integer(1));
        assert_eq!(coef(&w, &[X, Y]), Ratio::new(1, 2));
        // x + y + [x,y]/2 + [x,[x,y]]/12 - [y,[x,y]]/12
        assert_eq!(coef(&w, &[X, X, Y]), Ratio::new(1, 12));
        assert_eq!(coef(&w, &[Y, X, Y]), Ratio::new(-1, 12));
    }
}
