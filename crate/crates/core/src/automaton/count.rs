use num_bigint::{BigUint, RandBigInt};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use thiserror::Error;

use super::dfa::{Dfa, StateId};
use super::letter::{Letter, LetterModel};

/// `counts[t][q]`: number of length-`t` letter strings driving the automaton from its
/// initial state to `q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    pub counts: Vec<Vec<BigUint>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountResult {
    pub table: CountTable,
    /// Accepted strings of exactly the horizon length.
    pub accepted_at_n: BigUint,
    /// `accepted_at_n / letters^n`, exact.
    pub ratio: BigRational,
}

/// Per state, the targets reached with the number of letters leading there.
fn weighted_edges(dfa: &Dfa) -> Vec<Vec<(StateId, BigUint)>> {
    (0..dfa.num_states())
        .map(|s| dfa.transitions(s).into_iter().map(|(g, t)| (t, BigUint::from(g.size()))).collect())
        .collect()
}

/// Forward dynamic program over string length.
pub fn count_accepted(dfa: &Dfa, n: usize) -> CountResult {
    let states = dfa.num_states();
    let edges = weighted_edges(dfa);
    let mut counts = Vec::with_capacity(n + 1);
    let mut row = vec![BigUint::zero(); states];
    row[dfa.initial()] = BigUint::one();
    counts.push(row);
    for t in 0..n {
        let mut next = vec![BigUint::zero(); states];
        for (q, c) in counts[t].iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (target, w) in &edges[q] {
                next[*target] += c * w;
            }
        }
        counts.push(next);
    }
    let accepted_at_n: BigUint = dfa.accepting_states().map(|q| &counts[n][q]).sum();
    let total = BigUint::from(dfa.space().letter_count()).pow(n as u32);
    let ratio = BigRational::new(accepted_at_n.clone().into(), total.into());
    CountResult { table: CountTable { counts }, accepted_at_n, ratio }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SampleError {
    #[error("no string of length {0} is accepted")]
    Empty(usize),
}

/// Draws `k` strings of length `n`, each uniformly from the accepted set.
pub fn sample_accepted<R: Rng + ?Sized>(
    rng: &mut R,
    dfa: &Dfa,
    n: usize,
    k: usize,
) -> Result<Vec<Vec<Letter>>, SampleError> {
    let sampler = AcceptedSampler::new(dfa, n)?;
    Ok((0..k).map(|_| sampler.sample(rng)).collect())
}

/// Backward completion counts, reusable across draws.
pub struct AcceptedSampler<'a> {
    dfa: &'a Dfa,
    n: usize,
    /// `completions[t][q]`: accepted continuations of length `n - t` from `q`.
    completions: Vec<Vec<BigUint>>,
}

impl<'a> AcceptedSampler<'a> {
    pub fn new(dfa: &'a Dfa, n: usize) -> Result<Self, SampleError> {
        let states = dfa.num_states();
        let mut completions = vec![vec![BigUint::zero(); states]; n + 1];
        for q in dfa.accepting_states() {
            completions[n][q] = BigUint::one();
        }
        let edges = weighted_edges(dfa);
        for t in (0..n).rev() {
            for q in 0..states {
                let total: BigUint = edges[q].iter().map(|(target, w)| w * &completions[t + 1][*target]).sum();
                completions[t][q] = total;
            }
        }
        if completions[0][dfa.initial()].is_zero() {
            return Err(SampleError::Empty(n));
        }
        Ok(Self { dfa, n, completions })
    }

    pub fn accepted(&self) -> &BigUint {
        &self.completions[0][self.dfa.initial()]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Letter> {
        let dfa = self.dfa;
        let mut q = dfa.initial();
        let mut out = Vec::with_capacity(self.n);
        for t in 0..self.n {
            let mut pick = rng.gen_biguint_below(&self.completions[t][q]);
            let mut chosen = None;
            for (c, class) in dfa.classes().iter().enumerate() {
                let target = dfa.step_class(q, c);
                let weight = BigUint::from(class.size) * &self.completions[t + 1][target];
                if pick < weight {
                    chosen = Some((c, target));
                    break;
                }
                pick -= weight;
            }
            let (c, target) = chosen.expect("weights sum to the completion count");
            out.push(concrete_letter(rng, dfa, c));
            q = target;
        }
        out
    }
}

/// Uniform member of letter class `c`.
fn concrete_letter<R: Rng + ?Sized>(rng: &mut R, dfa: &Dfa, c: usize) -> Letter {
    let class = &dfa.classes()[c];
    let space = dfa.space();
    let support = dfa.support();
    match space.model {
        LetterModel::Free => {
            let mut l = class.representative;
            for i in 0..space.props as u8 {
                let p = crate::ltl::PropId(i);
                if !support.contains(&p) {
                    l = l.with(p, rng.gen_bool(0.5));
                }
            }
            l
        }
        LetterModel::OneHot => {
            if c < support.len() {
                class.representative
            } else {
                let outside: Vec<u8> =
                    (0..space.props as u8).filter(|&i| !support.contains(&crate::ltl::PropId(i))).collect();
                Letter::one_hot(crate::ltl::PropId(outside[rng.gen_range(0..outside.len())]))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{compile, LetterSpace};
    use crate::ltl::{parse, Alphabet};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn count(text: &str, k: usize, n: usize) -> CountResult {
        let alpha = Alphabet::symbols(k);
        count_accepted(&compile(&parse(text, &alpha).unwrap(), LetterSpace::one_hot(k)).unwrap(), n)
    }

    #[test]
    fn closed_forms_at_fifteen() {
        let five15 = BigUint::from(30_517_578_125u64);
        assert_eq!(count("a | !a", 5, 15).accepted_at_n, five15);
        assert!(count("a | !a", 5, 15).ratio.is_one());
        assert_eq!(count("F a", 5, 15).accepted_at_n, BigUint::from(29_443_836_301u64));
        let atom = count("a", 5, 15);
        assert_eq!(atom.accepted_at_n, BigUint::from(6_103_515_625u64));
        assert_eq!(atom.ratio, BigRational::new(1.into(), 5.into()));
        assert_eq!(count("G a", 5, 15).accepted_at_n, BigUint::one());
    }

    #[test]
    fn rows_sum_to_letter_powers() {
        let r = count("a U (b & X c)", 3, 9);
        for (t, row) in r.table.counts.iter().enumerate() {
            assert_eq!(row.iter().sum::<BigUint>(), BigUint::from(3u32).pow(t as u32));
        }
        assert!(r.table.counts[0][0].is_one());
    }

    #[test]
    fn horizon_zero_accepts_nothing() {
        let r = count("a | !a", 3, 0);
        assert!(r.accepted_at_n.is_zero());
    }

    #[test]
    fn unique_accepted_string() {
        let alpha = Alphabet::symbols(2);
        let d = compile(&parse("G a", &alpha).unwrap(), LetterSpace::one_hot(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let samples = sample_accepted(&mut rng, &d, 3, 5).unwrap();
        assert_eq!(samples, vec![vec![Letter(1); 3]; 5]);
    }

    #[test]
    fn empty_language_is_an_error() {
        let alpha = Alphabet::symbols(2);
        let d = compile(&parse("X X X a", &alpha).unwrap(), LetterSpace::one_hot(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_accepted(&mut rng, &d, 2, 1).unwrap_err(), SampleError::Empty(2));
    }
}
