//! Quine-McCluskey minimization with an exact minimum cover.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A product term over `k` lines: bit i of `care` set means line i appears,
/// with polarity given by bit i of `value`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Cube {
    pub k: u8,
    pub care: u64,
    pub value: u64,
}

impl Cube {
    pub fn minterm(k: u8, m: u64) -> Cube {
        Cube {
            k,
            care: mask(k),
            value: m,
        }
    }

    pub fn contains(&self, m: u64) -> bool {
        m & self.care == self.value
    }

    pub fn literals(&self) -> u32 {
        self.care.count_ones()
    }

    pub fn minterms(&self) -> impl Iterator<Item = u64> + '_ {
        (0..1u64 << self.k).filter(|&m| self.contains(m))
    }

    /// Literal list, most significant line first.
    pub fn literal_list(&self) -> Vec<(usize, bool)> {
        (0..self.k as usize)
            .rev()
            .filter(|&i| self.care >> i & 1 == 1)
            .map(|i| (i, self.value >> i & 1 == 1))
            .collect()
    }

    pub fn parse(s: &str) -> Option<Cube> {
        let k = s.len();
        if k > 6 {
            return None;
        }
        let mut c = Cube {
            k: k as u8,
            care: 0,
            value: 0,
        };
        for (j, ch) in s.chars().enumerate() {
            let i = k - 1 - j;
            match ch {
                '1' => {
                    c.care |= 1 << i;
                    c.value |= 1 << i;
                }
                '0' => c.care |= 1 << i,
                '-' => {}
                _ => return None,
            }
        }
        Some(c)
    }
}

impl From<Cube> for String {
    fn from(c: Cube) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for Cube {
    type Error = String;

    fn try_from(s: String) -> Result<Cube, String> {
        Cube::parse(&s).ok_or_else(|| format!("bad cube '{s}'"))
    }
}

/// MSB-first, e.g. `11--` for lines 3 and 2 high.
impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in (0..self.k).rev() {
            let c = if self.care >> i & 1 == 0 {
                '-'
            } else if self.value >> i & 1 == 1 {
                '1'
            } else {
                '0'
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

fn mask(k: u8) -> u64 {
    if k == 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

/// All prime implicants of the function whose on-set is `on` (bit m = minterm m).
pub fn prime_implicants(k: u8, on: u64) -> Vec<Cube> {
    let mut level: Vec<Cube> = (0..1u64 << k)
        .filter(|&m| on >> m & 1 == 1)
        .map(|m| Cube::minterm(k, m))
        .collect();
    let mut primes = vec![];
    while !level.is_empty() {
        let mut merged = vec![false; level.len()];
        let mut next: Vec<Cube> = vec![];
        for i in 0..level.len() {
            for j in i + 1..level.len() {
                let (a, b) = (level[i], level[j]);
                if a.care != b.care {
                    continue;
                }
                let diff = a.value ^ b.value;
                if diff.count_ones() == 1 {
                    merged[i] = true;
                    merged[j] = true;
                    let c = Cube {
                        k,
                        care: a.care & !diff,
                        value: a.value & !diff,
                    };
                    if !next.contains(&c) {
                        next.push(c);
                    }
                }
            }
        }
        for (c, m) in level.iter().zip(&merged) {
            if !m {
                primes.push(*c);
            }
        }
        level = next;
    }
    primes.sort_by_key(|c| c.to_string());
    primes
}

/// Node budget of the exact search.
const SEARCH_BUDGET: usize = 200_000;

/// Minimum cover of `on` by prime implicants: fewest cubes, then fewest
/// literals, then the lexicographically smallest sorted cube list.
pub fn minimize(k: u8, on: u64) -> Vec<Cube> {
    let primes = prime_implicants(k, on);
    let minterms: Vec<u64> = (0..1u64 << k).filter(|&m| on >> m & 1 == 1).collect();
    if minterms.is_empty() {
        return vec![];
    }
    // per-prime minterm sets as bitmasks over the minterm list (≤ 64 entries)
    let sets: Vec<u64> = primes
        .iter()
        .map(|p| {
            minterms
                .iter()
                .enumerate()
                .filter(|(_, &m)| p.contains(m))
                .fold(0u64, |acc, (i, _)| acc | 1 << i)
        })
        .collect();
    let all = mask(minterms.len() as u8);
    let mut search = Search {
        primes: &primes,
        sets: &sets,
        all,
        best: None,
        nodes: 0,
    };
    search.run(&mut vec![], 0);
    // past the budget the best cover found so far is kept; it is still a prime cover
    let chosen = match search.best {
        Some((_, _, c)) => c,
        None => greedy(&primes, &sets, all),
    };
    let mut out: Vec<Cube> = chosen.iter().map(|&i| primes[i]).collect();
    out.sort_by_key(|c| c.to_string());
    out
}

type Best = (usize, u32, Vec<usize>);

struct Search<'a> {
    primes: &'a [Cube],
    sets: &'a [u64],
    all: u64,
    best: Option<Best>,
    nodes: usize,
}

impl Search<'_> {
    fn key(&self, chosen: &[usize]) -> (usize, u32, Vec<String>) {
        let mut names: Vec<String> = chosen.iter().map(|&i| self.primes[i].to_string()).collect();
        names.sort();
        let lits = chosen.iter().map(|&i| self.primes[i].literals()).sum();
        (chosen.len(), lits, names)
    }

    fn run(&mut self, chosen: &mut Vec<usize>, covered: u64) {
        self.nodes += 1;
        if self.nodes > SEARCH_BUDGET {
            return;
        }
        let lits: u32 = chosen.iter().map(|&i| self.primes[i].literals()).sum();
        if let Some((n, l, _)) = &self.best {
            // equal-cost branches are kept for the lexicographic tie-break
            if (chosen.len(), lits) > (*n, *l) {
                return;
            }
            if chosen.len() == *n && covered != self.all {
                return;
            }
        }
        if covered == self.all {
            let better = match &self.best {
                None => true,
                Some(b) => {
                    let bk = self.key(&b.2);
                    self.key(chosen) < bk
                }
            };
            if better {
                self.best = Some((chosen.len(), lits, chosen.clone()));
            }
            return;
        }
        // branch on the uncovered minterm with the fewest candidate primes
        let uncovered = self.all & !covered;
        let mut pick = None;
        let mut fewest = usize::MAX;
        let mut bits = uncovered;
        while bits != 0 {
            let b = bits.trailing_zeros();
            bits &= bits - 1;
            let n = self.sets.iter().filter(|s| *s >> b & 1 == 1).count();
            if n < fewest {
                fewest = n;
                pick = Some(b);
            }
        }
        let b = pick.expect("uncovered minterm exists");
        for i in 0..self.primes.len() {
            if self.sets[i] >> b & 1 == 1 {
                chosen.push(i);
                self.run(chosen, covered | self.sets[i]);
                chosen.pop();
            }
        }
    }
}

fn greedy(primes: &[Cube], sets: &[u64], all: u64) -> Vec<usize> {
    let mut covered = 0;
    let mut chosen = vec![];
    while covered != all {
        let i = (0..primes.len())
            .max_by_key(|&i| {
                (
                    (sets[i] & !covered).count_ones(),
                    std::cmp::Reverse(primes[i].literals()),
                    std::cmp::Reverse(primes[i].to_string()),
                )
            })
            .expect("primes cover every minterm");
        covered |= sets[i];
        chosen.push(i);
    }
    chosen
}
