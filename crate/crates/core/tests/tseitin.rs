mod common;

use std::collections::HashMap;

use common::{eval_signal as eval, random_netlist};
use lutscope::netlist::{parse_netlist, Design, SigIdx};
use lutscope::prove::{encode_lut, extract_cone, CnfFormula, Encoder, InitState, Lit, SatResult, Solver};
use lutscope::logic::TruthTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn cone_encoding_matches_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    for seed in 0..30 {
        let n = parse_netlist(&random_netlist(seed, 5, 14, 3), None).unwrap();
        let d = Design::new(&n).unwrap();
        for &c in &d.luts {
            let target = d.cells[c].output;
            let cone = extract_cone(&d, &[target]);
            let mut solver = Solver::new();
            let mut enc = Encoder::new(&d, InitState::Free);
            let t = enc.lit(&mut solver, 0, target);
            let support_lits: Vec<(SigIdx, Lit)> =
                cone.support.iter().map(|&s| (s, enc.lit(&mut solver, 0, s))).collect();
            for _ in 0..4 {
                let values: HashMap<SigIdx, bool> = cone.support.iter().map(|&s| (s, rng.gen())).collect();
                let want = eval(&d, target, &values, &mut HashMap::new());
                let mut assume: Vec<Lit> = support_lits.iter().map(|&(s, l)| if values[&s] { l } else { !l }).collect();
                assert_eq!(solver.solve(&assume), SatResult::Sat);
                assert_eq!(solver.model_lit(t), want, "seed {seed} cell {}", d.cells[c].name);
                assume.push(if want { !t } else { t });
                assert_eq!(solver.solve(&assume), SatResult::Unsat);
                checked += 1;
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn lut_clauses_define_the_function() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 1..=6u8 {
        for _ in 0..10 {
            let bits = rng.gen::<u64>() & if k == 6 { u64::MAX } else { (1 << (1 << k)) - 1 };
            let init = TruthTable::new(k, bits).unwrap();
            let mut f = CnfFormula::default();
            let ins: Vec<Lit> = (0..k as u32).map(Lit::pos).collect();
            let out = Lit::pos(k as u32);
            encode_lut(&mut f, &init, &ins, out);
            // every full assignment satisfies the clauses iff out equals the lookup
            for m in 0..1u64 << (k + 1) {
                let sat = f.clauses.iter().all(|c| {
                    c.iter().any(|&l| (m >> (l.unsigned_abs() - 1) & 1 == 1) == (l > 0))
                });
                let addr = m & ((1 << k) - 1);
                let o = m >> k & 1 == 1;
                assert_eq!(sat, o == (bits >> addr & 1 == 1), "k={k} bits={bits:x} m={m:b}");
            }
        }
    }
}

#[test]
fn dimacs_roundtrip() {
    let n = parse_netlist(&random_netlist(3, 4, 10, 2), None).unwrap();
    let d = Design::new(&n).unwrap();
    let mut f = CnfFormula::default();
    let mut enc = Encoder::new(&d, InitState::Reset);
    for &c in &d.luts {
        enc.lit(&mut f, 1, d.cells[c].output);
    }
    f.names = enc.var_names();
    let text = f.to_dimacs();
    let back = CnfFormula::parse_dimacs(&text).unwrap();
    assert_eq!(back.num_vars, f.num_vars);
    assert_eq!(back.clauses, f.clauses);
    let mut s = back.to_solver();
    assert_eq!(s.solve(&[]), SatResult::Sat);
    assert!(CnfFormula::parse_dimacs("p cnf 2 1\n1 x 0\n").is_err());
}
