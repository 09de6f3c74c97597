//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Tolerances are pinned here: 60 s wall time per synthesis, 5 standard
//! errors for sampled step distributions, zero tolerance everywhere else.
//! A criterion marked `enforced: false` prints its verdict but does not fail
//! the run (see the README for why criterion 4's literal closed form cannot
//! hold).

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use supermart::certificates::finite as fc;
use supermart::certificates::json::{check_symbolic, parse_symbolic_cert};
use supermart::certificates::symbolic::check_lexpmsm_map as check_map_symbolic;
use supermart::certificates::translate::{lexgssms_to_reduced, lexpmsm_to_lexgssm, reduced_to_full};
use supermart::certificates::LexPmsMap;
use supermart::lexorder::{
    lex_geq, lex_geq_trunc, lex_gt, lex_gt_trunc, nested_geq, nested_geq_trunc, nested_gt, nested_gt_at, nested_gt_trunc,
    Level, Nested,
};
use supermart::model::json::parse_system;
use supermart::model::{parity_to_streett, streett_pair_to_parity, Atom, FiniteChain, Rel, StreettPair};
use supermart::oracle::testing::{random_chain, random_pair};
use supermart::oracle::{
    almost_sure_parity, expected_steps_exact, ke_iterate, kp_iterate, null_recurrent, sample_traces, step_distribution_exact,
    StepValue,
};
use supermart::poly::{LinForm, ParamPoly, Polynomial};
use supermart::pqe::{farkas_reduce, Backend, Pqe, SolveOutcome};
use supermart::rational::{int, rat, to_f64, Ext, Rat};
use supermart::synthesis::{ssm_template_system, synthesize, synthesize_finite, SynthesisResult, TemplateConfig};

const SYNTH_LIMIT: Duration = Duration::from_secs(60);
const SE_BOUND: f64 = 5.0;
const POOL_MIN: f64 = 5.0;

struct Outcome {
    pass: bool,
    enforced: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, enforced: true, detail }
}

const EX_3_8: &str = include_str!("../../cli/benchmarks/ex_3_8.json");
const EX_3_9: &str = include_str!("../../cli/benchmarks/ex_3_9.json");
const EX_3_9_REAL: &str = include_str!("../../cli/benchmarks/ex_3_9_real.json");
const EX_4_11: &str = include_str!("../../cli/benchmarks/ex_4_11.json");

fn criterion_1() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for (name, text) in [("ex_3_9", EX_3_9), ("ex_4_11", EX_4_11), ("ex_3_8", EX_3_8), ("ex_3_9_real", EX_3_9_REAL)] {
        let sys = parse_system(text).expect("bundled system parses");
        let started = Instant::now();
        let res = synthesize(&sys, &TemplateConfig::default(), &Backend::ExactLp);
        let took = started.elapsed();
        let ok = match &res {
            Ok((SynthesisResult::Found(map), _)) => check_map_symbolic(&sys, map).is_accept() && took < SYNTH_LIMIT,
            _ => false,
        };
        pass &= ok;
        notes.push(format!("{name} {} in {:.2}s", if ok { "ok" } else { "failed" }, took.as_secs_f64()));
    }
    outcome(pass, notes.join(", "))
}

fn criterion_2() -> Outcome {
    let cases = [
        ("ex_3_8 gssm", EX_3_8, include_str!("../../cli/benchmarks/ex_3_8.gssm.cert.json")),
        ("ex_3_9 gssm", EX_3_9, include_str!("../../cli/benchmarks/ex_3_9.gssm.cert.json")),
        ("ex_4_11 lexgssm", EX_4_11, include_str!("../../cli/benchmarks/ex_4_11.lexgssm.cert.json")),
    ];
    let mut notes = Vec::new();
    let mut pass = true;
    for (name, sys_text, cert_text) in cases {
        let sys = parse_system(sys_text).expect("bundled system parses");
        let cert = parse_symbolic_cert(cert_text, &sys).expect("bundled certificate parses");
        let v = check_symbolic(&sys, &cert);
        pass &= v.is_accept();
        notes.push(format!("{name} {}", v.name()));
    }
    outcome(pass, notes.join(", "))
}

fn criterion_3() -> Outcome {
    let sys = parse_system(EX_3_9).expect("bundled system parses");
    let ps = ssm_template_system(&sys, sys.partition.half(), 1, &int(1000));
    match Backend::ExactLp.solve(&ps) {
        SolveOutcome::Unsat => outcome(true, "degree-1 SSM templates with 0 ≤ M ≤ 1000: unsat".into()),
        other => outcome(false, format!("expected unsat, got {other:?}")),
    }
}

fn geometric() -> (FiniteChain, StreettPair) {
    let chain = FiniteChain::new(vec![vec![(0, rat(1, 2)), (1, rat(1, 2))], vec![(1, int(1))]], vec![3, 2]).unwrap();
    let pair = parity_to_streett(chain.priorities(), 4).unwrap().remove(1);
    (chain, pair)
}

fn criterion_4() -> Outcome {
    let (chain, pair) = geometric();
    let e = expected_steps_exact(&chain, &pair);
    let exact = e[0] == StepValue::Exact(int(2));
    let iterates = ke_iterate(&chain, &pair, 20);
    let half = rat(1, 2);
    let pow = |n: usize| (0..n).fold(Rat::one(), |acc, _| acc * &half);
    // K_E^n(0) at the looping state is E[min(T, n)] = 2 − 2^(1−n).
    let derived = iterates.iter().enumerate().all(|(i, it)| it[0] == int(2) - pow(i) && it[1].is_zero());
    // The literal form Σ_{k≤n} k·2^(−k) is E[T; T ≤ n].
    let literal_mismatch = iterates.iter().enumerate().find_map(|(i, it)| {
        let n = i + 1;
        let sum: Rat = (1..=n).map(|k| int(k as i64) * pow(k)).sum();
        (it[0] != sum).then(|| (n, it[0].clone(), sum))
    });
    let literal = literal_mismatch.is_none();
    let detail = format!(
        "E = 2 exact: {exact}; iterates equal 2 − 2^(1−n) for n ≤ 20: {derived}; literal Σ k·2^(−k) form: {}",
        match &literal_mismatch {
            None => "matches".to_string(),
            Some((n, got, sum)) => format!("first differs at n = {n} (iterate {got}, sum {sum})"),
        }
    );
    if !(exact && derived) {
        return outcome(false, detail);
    }
    Outcome { pass: literal, enforced: false, detail }
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (h, samples) = (10usize, 1000usize);
    let mut violations = Vec::new();
    let mut worst = 0f64;
    for case in 0..1000u64 {
        let chain = random_chain(&mut rng, 6, 4);
        let pair = random_pair(&mut rng, chain.len());
        let ke = ke_iterate(&chain, &pair, 20);
        let monotone = ke[0].iter().all(|x| !x.is_negative())
            && ke.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| a <= b));
        if !monotone {
            violations.push(format!("case {case}: K_E not monotone"));
        }
        let kp = kp_iterate(&chain, &pair, h + 1, h + 1);
        let mass_ok = kp.iter().flatten().all(|d| d.masses.iter().cloned().sum::<Rat>() <= Rat::one() && d.total() == Rat::one());
        if !mass_ok {
            violations.push(format!("case {case}: K_P mass"));
        }
        // The (h+1)-th iterate counts x_0 … x_h, as sample_traces does.
        let s0 = rng.gen_range(0..chain.len());
        let rep = sample_traces(&chain, Some(&pair), s0, h, samples, case);
        let exact = &kp[h][s0];
        for group in pooled(&exact.masses, samples) {
            let p: f64 = group.iter().map(|&m| to_f64(&exact.masses[m])).sum();
            let count: u64 = group.iter().map(|&m| rep.step_counts[m]).sum();
            let phat = count as f64 / samples as f64;
            let z = if p == 0.0 {
                if count > 0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            } else {
                (phat - p).abs() / (p * (1.0 - p) / samples as f64).sqrt()
            };
            worst = worst.max(z);
            if z > SE_BOUND {
                violations.push(format!("case {case}: step counts {group:?} off by {z:.2} SE (p {p:.3e}, observed {count})"));
            }
        }
    }
    let detail = format!("1000 chains, {samples} traces each, worst deviation {worst:.2} SE, {} violations", violations.len());
    outcome(violations.is_empty(), if violations.is_empty() { detail } else { format!("{detail}: {}", violations[0]) })
}

/// Groups of step counts with an expected count of at least `POOL_MIN`
/// each, so the normal approximation behind the SE bound holds. Counts of
/// probability zero form their own groups and must never be observed.
fn pooled(masses: &[Rat], samples: usize) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = masses.iter().enumerate().filter(|(_, p)| p.is_zero()).map(|(m, _)| vec![m]).collect();
    let mut heavy: Vec<Vec<usize>> = Vec::new();
    let (mut cur, mut expected) = (Vec::new(), 0.0);
    for (m, p) in masses.iter().enumerate().filter(|(_, p)| !p.is_zero()) {
        cur.push(m);
        expected += to_f64(p) * samples as f64;
        if expected >= POOL_MIN {
            heavy.push(std::mem::take(&mut cur));
            expected = 0.0;
        }
    }
    match heavy.last_mut() {
        Some(last) => last.extend(cur),
        None if !cur.is_empty() => heavy.push(cur),
        None => {}
    }
    groups.extend(heavy);
    groups
}

fn even_ceiling(d: usize) -> usize {
    d + d % 2
}

fn small(rng: &mut ChaCha8Rng) -> Rat {
    int(rng.gen_range(0..=3))
}

fn random_nested(rng: &mut ChaCha8Rng, n: usize, shape: &[usize]) -> Vec<Vec<Vec<Rat>>> {
    (0..n).map(|_| shape.iter().map(|&m| (0..m).map(|_| small(rng)).collect()).collect()).collect()
}

fn random_masses(rng: &mut ChaCha8Rng, n: usize, width: usize) -> Vec<Vec<Rat>> {
    (0..n)
        .map(|_| {
            let mut v = vec![Rat::zero(); width];
            for _ in 0..4 {
                v[rng.gen_range(0..width)] += rat(1, 4);
            }
            v
        })
        .collect()
}

/// Per-state full LexPMSM from a synthesised map.
fn full_of(chain: &FiniteChain, map: &LexPmsMap<usize, Rat>) -> Vec<Vec<Vec<Rat>>> {
    (0..chain.len()).map(|s| reduced_to_full(&map.values[&s], chain.max_priority(), &Rat::zero())).collect()
}

fn bump(r: &[Vec<Vec<Rat>>]) -> Vec<Vec<Vec<Rat>>> {
    r.iter().map(|b| b.iter().map(|v| v.iter().map(|x| x * int(2) + int(1)).collect()).collect()).collect()
}

#[derive(Default)]
struct Tally {
    accepted: usize,
    violations: Vec<String>,
}

impl Tally {
    fn record(&mut self, accepted: bool, holds: bool, what: impl FnOnce() -> String) {
        if accepted {
            self.accepted += 1;
            if !holds {
                self.violations.push(what());
            }
        }
    }
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut t = Tally::default();
    let mut found = 0;
    for case in 0..1000 {
        let maxp = rng.gen_range(2..=5);
        let chain = random_chain(&mut rng, 6, maxp);
        let n = chain.len();
        let d = chain.max_priority();
        let parity = almost_sure_parity(&chain).iter().all(|&b| b);
        let pairs = parity_to_streett(chain.priorities(), even_ceiling(d)).expect("valid priorities");

        let map = match synthesize_finite(&chain, None) {
            Ok((SynthesisResult::Found(map), _)) => Some(map),
            Ok(_) => None,
            Err(e) => {
                t.violations.push(format!("case {case}: synthesis error {e}"));
                None
            }
        };
        let full = map.as_ref().map(|m| full_of(&chain, m));
        if let Some(map) = &map {
            found += 1;
            t.record(true, parity, || format!("case {case}: synthesize_finite"));
            t.record(fc::check_lexpmsm_map(&chain, map).is_accept(), parity, || format!("case {case}: map"));
            let reduced: Vec<_> = (0..n).map(|s| map.values[&s].clone()).collect();
            t.record(fc::check_reduced_lexpmsm(&chain, &reduced).is_accept(), parity, || format!("case {case}: reduced"));
            let full = full.as_ref().expect("set with the map");
            t.record(fc::check_lexpmsm(&chain, full).is_accept(), parity, || format!("case {case}: lexpmsm"));
            t.record(fc::check_lexpmsm(&chain, &bump(full)).is_accept(), parity, || format!("case {case}: bumped lexpmsm"));
            if map.shape.iter().all(|&m| m == 1) {
                let flat: Vec<Vec<Rat>> = full.iter().map(|b| b.iter().flatten().cloned().collect()).collect();
                t.record(fc::check_pmsm(&chain, &flat).is_accept(), parity, || format!("case {case}: pmsm"));
            }
        }
        let pmsm: Vec<Vec<Rat>> = (0..n).map(|_| (0..d).map(|_| small(&mut rng)).collect()).collect();
        t.record(fc::check_pmsm(&chain, &pmsm).is_accept(), parity, || format!("case {case}: random pmsm"));
        let shape: Vec<usize> = (0..d).map(|_| rng.gen_range(1..=2)).collect();
        let lex = random_nested(&mut rng, n, &shape);
        t.record(fc::check_lexpmsm(&chain, &lex).is_accept(), parity, || format!("case {case}: random lexpmsm"));
        let shape: Vec<usize> = (0..d.div_ceil(2)).map(|_| rng.gen_range(1..=2)).collect();
        let red = random_nested(&mut rng, n, &shape);
        t.record(fc::check_reduced_lexpmsm(&chain, &red).is_accept(), parity, || format!("case {case}: random reduced"));

        // Streett checkers certify their own pair; a certificate for every
        // pair together certifies parity.
        let mut all_pairs = true;
        for (i, pair) in pairs.iter().enumerate() {
            let nr = null_recurrent(&chain, pair).iter().all(|&b| b);
            let mut any = false;
            let mut rec = |t: &mut Tally, ok: bool, what: &str| {
                any |= ok;
                t.record(ok, nr, || format!("case {case} pair {}: {what}", i + 1));
            };
            let e = expected_steps_exact(&chain, pair);
            if let Some(r) = e.iter().map(|v| v.exact().cloned()).collect::<Option<Vec<Rat>>>() {
                rec(&mut t, fc::check_gssm(&chain, pair, &r).is_accept(), "gssm from expected steps");
                rec(&mut t, fc::check_ssm(&chain, pair, &r, &int(1), &int(0)).is_accept(), "ssm from expected steps");
            }
            let r: Vec<Rat> = (0..n).map(|_| small(&mut rng)).collect();
            rec(&mut t, fc::check_gssm(&chain, pair, &r).is_accept(), "random gssm");
            let (eps, m) = (int(rng.gen_range(1..=2)), int(rng.gen_range(0..=2)));
            rec(&mut t, fc::check_ssm(&chain, pair, &r, &eps, &m).is_accept(), "random ssm");
            if let Some(full) = &full {
                if 2 * (i + 1) - 1 <= d {
                    let lg: Vec<Vec<Rat>> = full.iter().map(|b| lexpmsm_to_lexgssm(b, i + 1)).collect();
                    rec(&mut t, fc::check_lexgssm(&chain, pair, &lg).is_accept(), "lexgssm from lexpmsm");
                }
            }
            let lg: Vec<Vec<Rat>> = (0..n).map(|_| (0..2).map(|_| small(&mut rng)).collect()).collect();
            rec(&mut t, fc::check_lexgssm(&chain, pair, &lg).is_accept(), "random lexgssm");
            let dist = step_distribution_exact(&chain, pair, 6);
            if dist.iter().all(|x| x.tail.is_zero()) {
                let masses: Vec<Vec<Rat>> = dist.iter().map(|x| x.masses.clone()).collect();
                rec(&mut t, fc::check_dvssm(&chain, pair, &masses).is_accept(), "dvssm from exact distribution");
            }
            let masses = random_masses(&mut rng, n, 3);
            rec(&mut t, fc::check_dvssm(&chain, pair, &masses).is_accept(), "random dvssm");
            all_pairs &= any;
        }
        t.record(all_pairs, parity, || format!("case {case}: certificates for every pair"));
    }
    let detail = format!(
        "1000 chains, {found} synthesised, {} accepted certificates, {} violations",
        t.accepted,
        t.violations.len()
    );
    outcome(t.violations.is_empty(), if t.violations.is_empty() { detail } else { format!("{detail}: {}", t.violations[0]) })
}

/// LexGSSM for one pair, synthesised on the chain recoloured by that pair.
fn pair_lexgssm(chain: &FiniteChain, pair: &StreettPair) -> Option<Vec<Vec<Rat>>> {
    if (0..chain.len()).all(|s| !pair.in_a_minus_b(s)) {
        return Some(vec![vec![Rat::zero()]; chain.len()]);
    }
    let recoloured = chain.with_priorities(streett_pair_to_parity(pair)).ok()?;
    match synthesize_finite(&recoloured, None).ok()?.0 {
        SynthesisResult::Found(map) => Some(full_of(&recoloured, &map).iter().map(|b| lexpmsm_to_lexgssm(b, 2)).collect()),
        SynthesisResult::NotFound { .. } => None,
    }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = Vec::new();
    let (mut to_lexgssm, mut to_reduced) = (0, 0);
    for case in 0..500 {
        let maxp = rng.gen_range(2..=5);
        let chain = random_chain(&mut rng, 6, maxp);
        let d = chain.max_priority();
        let pairs = parity_to_streett(chain.priorities(), even_ceiling(d)).expect("valid priorities");

        if let Ok((SynthesisResult::Found(map), _)) = synthesize_finite(&chain, None) {
            let mut full = full_of(&chain, &map);
            if rng.gen_bool(0.5) {
                full = bump(&full);
            }
            if fc::check_lexpmsm(&chain, &full).is_accept() {
                for (i, pair) in pairs.iter().enumerate().filter(|(i, _)| 2 * i + 1 <= d) {
                    to_lexgssm += 1;
                    let lg: Vec<Vec<Rat>> = full.iter().map(|b| lexpmsm_to_lexgssm(b, i + 1)).collect();
                    if !fc::check_lexgssm(&chain, pair, &lg).is_accept() {
                        violations.push(format!("case {case}: lexgssm for pair {} rejected", i + 1));
                    }
                }
            }
        }

        let per_pair: Option<Vec<Vec<Vec<Rat>>>> = pairs
            .iter()
            .map(|pair| {
                if rng.gen_bool(0.2) {
                    Some((0..chain.len()).map(|_| vec![small(&mut rng), small(&mut rng)]).collect())
                } else {
                    pair_lexgssm(&chain, pair)
                }
            })
            .collect();
        let Some(per_pair) = per_pair else { continue };
        if per_pair.iter().zip(&pairs).all(|(lg, pair)| fc::check_lexgssm(&chain, pair, lg).is_accept()) {
            to_reduced += 1;
            let reduced: Vec<Vec<Vec<Rat>>> = (0..chain.len())
                .map(|s| lexgssms_to_reduced(&per_pair.iter().map(|lg| lg[s].clone()).collect::<Vec<_>>()))
                .collect();
            if !fc::check_reduced_lexpmsm(&chain, &reduced).is_accept() {
                violations.push(format!("case {case}: reduced LexPMSM rejected"));
            }
        }
    }
    let detail = format!(
        "500 cases, {to_lexgssm} LexPMSM to LexGSSM and {to_reduced} LexGSSMs to reduced translations, {} violations",
        violations.len()
    );
    outcome(violations.is_empty(), if violations.is_empty() { detail } else { format!("{detail}: {}", violations[0]) })
}

fn random_ext(rng: &mut ChaCha8Rng) -> Ext {
    match rng.gen_range(0..8) {
        0 => Ext::Inf,
        1 => Ext::Fin(rat(1, 2)),
        k => Ext::Fin(int(k as i64 - 2)),
    }
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut violations = Vec::new();
    let mut fail = |ok: bool, what: &str, case: usize| {
        if !ok {
            violations.push(format!("vector {case}: {what}"));
        }
    };
    for case in 0..10_000 {
        let shape: Vec<usize> = (0..rng.gen_range(1..=4)).map(|_| rng.gen_range(1..=3)).collect();
        let u = Nested::new(shape.iter().map(|&m| (0..m).map(|_| random_ext(&mut rng)).collect()).collect()).unwrap();
        // Half the pairs share a prefix so ties are common.
        let mut v = Nested::new(shape.iter().map(|&m| (0..m).map(|_| random_ext(&mut rng)).collect()).collect()).unwrap();
        if rng.gen_bool(0.5) {
            let keep = rng.gen_range(0..shape.len());
            v.blocks[..keep].clone_from_slice(&u.blocks[..keep]);
        }
        let (fu, fv) = (u.flatten(), v.flatten());

        let gt = nested_gt(&u, &v).unwrap();
        let flat_gt = lex_gt(&fu, &fv).unwrap();
        fail(gt.map(|l| l.flat(&shape)) == flat_gt, "nested ≻ differs from flat ≻", case);
        fail(nested_geq(&u, &v).unwrap() == lex_geq(&fu, &fv).unwrap(), "nested ⪰ differs from flat ⪰", case);

        let mut prefix = 0;
        let mut earlier_strict: Option<Level> = None;
        for j in 1..=shape.len() {
            prefix += shape[j - 1];
            let t = nested_gt_trunc(&u, &v, j).unwrap();
            fail(t == nested_gt(&u.truncate(j), &v.truncate(j)).unwrap(), "truncated ≻ differs from ≻ on the prefix", case);
            fail(t.map(|l| l.flat(&shape)) == lex_gt_trunc(&fu, &fv, prefix).unwrap(), "truncated ≻ differs from flat", case);
            fail(
                nested_geq_trunc(&u, &v, j).unwrap() == lex_geq_trunc(&fu, &fv, prefix).unwrap(),
                "truncated ⪰ differs from flat",
                case,
            );
            if let Some(l) = earlier_strict {
                fail(t == Some(l), "strictness lost when extending the truncation", case);
            }
            if earlier_strict.is_none() {
                earlier_strict = t;
            }
            if j > 1 && nested_geq_trunc(&u, &v, j).unwrap() {
                fail(nested_geq_trunc(&u, &v, j - 1).unwrap(), "⪰ not preserved by truncation", case);
            }
        }
        fail(earlier_strict == gt, "full ≻ differs from the longest truncation", case);

        for (b, &m) in shape.iter().enumerate() {
            for i in 1..=m {
                let l = Level::new(b + 1, i);
                let at = nested_gt_at(&u, &v, l).unwrap();
                match gt {
                    Some(w) if w == l => fail(at, "returned level is not a witness", case),
                    Some(w) if l < w => fail(!at, "a smaller level also witnesses", case),
                    None => fail(!at, "witness exists but ≻ reported none", case),
                    _ => {}
                }
            }
        }
        if let Some(w) = gt {
            let k = w.flat(&shape) - 1;
            fail(fu[..k].iter().zip(&fv[..k]).all(|(a, b)| a.ge(b)) && fu[k].ge_succ(&fv[k]), "witness inequalities", case);
        }
    }
    let n = violations.len();
    outcome(n == 0, if n == 0 { "10000 vector pairs, 0 violations".into() } else { format!("{n} violations: {}", violations[0]) })
}

fn random_linear(rng: &mut ChaCha8Rng, nvars: usize) -> Polynomial {
    let coeffs: Vec<Rat> = (0..nvars).map(|_| int(rng.gen_range(-3..=3))).collect();
    Polynomial::affine(&coeffs, int(rng.gen_range(-3..=3)))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut solved, mut attempts, mut points, mut unsat) = (0, 0, 0usize, 0);
    let mut violations = Vec::new();
    while solved < 200 && attempts < 5000 {
        attempts += 1;
        let nvars = rng.gen_range(1..=3);
        let mut antecedent = Vec::new();
        let mut bounds = Vec::new();
        for i in 0..nvars {
            let lo = rng.gen_range(-5..=0);
            let hi = lo + rng.gen_range(1..=6);
            let x = Polynomial::var(nvars, i);
            antecedent.push(Atom::new(&x - &Polynomial::constant(nvars, int(lo)), Rel::Ge));
            antecedent.push(Atom::new(&Polynomial::constant(nvars, int(hi)) - &x, Rel::Ge));
            bounds.push((lo, hi));
        }
        let grid = |rng: &mut ChaCha8Rng| -> Vec<Rat> {
            bounds.iter().map(|&(lo, hi)| int(lo) + rat(rng.gen_range(0..=16) * (hi - lo), 16)).collect()
        };
        // General atoms are made to hold at one grid point, so the
        // antecedent is never empty.
        for _ in 0..rng.gen_range(0..=2) {
            let p = random_linear(&mut rng, nvars);
            let at = grid(&mut rng);
            let shift = -p.eval(&at) + int(rng.gen_range(0..=2));
            let rel = if rng.gen_bool(0.5) { Rel::Ge } else { Rel::Gt };
            let poly = &p + &Polynomial::constant(nvars, shift.clone());
            let rel = if rel == Rel::Gt && shift == -p.eval(&at) { Rel::Ge } else { rel };
            antecedent.push(Atom::new(poly, rel));
        }
        let mut next = 0;
        let (template, params) = ParamPoly::template(nvars, 1, &mut next);
        let mut consequent = template;
        consequent.add_poly(&random_linear(&mut rng, nvars), &Rat::one());
        let pqe = Pqe {
            universals: (0..nvars).map(|i| format!("x{i}")).collect(),
            antecedent,
            consequent,
            strict: rng.gen_bool(0.5),
            label: format!("pqe {attempts}"),
        };
        let mut ps = farkas_reduce(&pqe, params.len()).expect("degree-1 entailment");
        let mut objective = LinForm::constant(Rat::zero());
        for &p in &params {
            let mut hi = LinForm::constant(int(5));
            hi.add_param(p, &int(-1));
            ps.add_constraint(hi, Rel::Ge, format!("t{p} ≤ 5"));
            let mut lo = LinForm::constant(int(5));
            lo.add_param(p, &int(1));
            ps.add_constraint(lo, Rel::Ge, format!("t{p} ≥ −5"));
            objective.add_param(p, &int(rng.gen_range(-2..=2)));
        }
        ps.objective = Some(objective);
        let model = match Backend::ExactLp.solve(&ps) {
            SolveOutcome::Sat(m) => m,
            SolveOutcome::Unsat => {
                unsat += 1;
                continue;
            }
            SolveOutcome::Unknown(why) => {
                violations.push(format!("{}: backend unknown ({why})", pqe.label));
                continue;
            }
        };
        solved += 1;
        let mut seen = 0;
        for _ in 0..50_000 {
            if seen == 1000 {
                break;
            }
            let x = grid(&mut rng);
            if !pqe.antecedent.iter().all(|a| a.holds(&x)) {
                continue;
            }
            seen += 1;
            if !pqe.holds_at(&model, &x) {
                violations.push(format!("{} violated at {x:?}", pqe.label));
            }
        }
        points += seen;
    }
    let detail = format!(
        "{solved} solved PQEs ({unsat} unsat skipped), {points} sampled points, {} violations",
        violations.len()
    );
    let pass = violations.is_empty() && solved == 200;
    outcome(pass, if violations.is_empty() { detail } else { format!("{detail}: {}", violations[0]) })
}

fn main() -> ExitCode {
    let criteria: [(usize, fn() -> Outcome); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut failed = false;
    for (n, run) in criteria {
        let started = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && !o.enforced { " [not enforced]" } else { "" };
        println!("criterion {n}: {tag}{note} ({}; {:.1}s)", o.detail, started.elapsed().as_secs_f64());
        failed |= !o.pass && o.enforced;
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
