use lutscope::prove::{CnfFormula, Lit, SatResult, Solver};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn brute_force(n: u32, clauses: &[Vec<i64>]) -> bool {
    (0..1u64 << n).any(|m| {
        clauses.iter().all(|c| {
            c.iter().any(|&l| {
                let v = (m >> (l.unsigned_abs() - 1)) & 1 == 1;
                v == (l > 0)
            })
        })
    })
}

fn random_formula(rng: &mut ChaCha8Rng, n: u32, m: usize, width: usize) -> Vec<Vec<i64>> {
    (0..m)
        .map(|_| {
            (0..width)
                .map(|_| {
                    let v = rng.gen_range(1..=n as i64);
                    if rng.gen() {
                        v
                    } else {
                        -v
                    }
                })
                .collect()
        })
        .collect()
}

fn check(clauses: &[Vec<i64>], n: u32) {
    let f = CnfFormula {
        num_vars: n,
        clauses: clauses.to_vec(),
        names: vec![],
    };
    let mut s = f.to_solver();
    let r = s.solve(&[]);
    let expected = brute_force(n, clauses);
    assert_eq!(r == SatResult::Sat, expected, "verdict mismatch on {clauses:?}");
    if r == SatResult::Sat {
        for c in clauses {
            assert!(c.iter().any(|&l| s.model_lit(Lit::from_dimacs(l))));
        }
    }
}

#[test]
fn random_3cnf_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5a7);
    for i in 0..500 {
        let n = rng.gen_range(3..=20);
        // around the 4.26 clause/variable threshold, where both verdicts occur
        let m = (n as f64 * rng.gen_range(3.0..5.5)) as usize;
        let width = if i % 5 == 0 { rng.gen_range(1..=4) } else { 3 };
        let f = random_formula(&mut rng, n, m, width);
        check(&f, n);
    }
}

#[test]
fn incremental_assumptions_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..100 {
        let n = rng.gen_range(4..=12);
        let f = random_formula(&mut rng, n, (n * 3) as usize, 3);
        let mut s = Solver::new();
        for _ in 0..n {
            s.new_var();
        }
        for c in &f {
            let lits: Vec<Lit> = c.iter().map(|&l| Lit::from_dimacs(l)).collect();
            s.add_clause(&lits);
        }
        for _ in 0..5 {
            let a: Vec<i64> = (0..rng.gen_range(0..4))
                .map(|_| {
                    let v = rng.gen_range(1..=n as i64);
                    if rng.gen() {
                        v
                    } else {
                        -v
                    }
                })
                .collect();
            let mut with_units = f.clone();
            with_units.extend(a.iter().map(|&l| vec![l]));
            let lits: Vec<Lit> = a.iter().map(|&l| Lit::from_dimacs(l)).collect();
            let r = s.solve(&lits);
            assert_eq!(r == SatResult::Sat, brute_force(n, &with_units));
        }
    }
}
