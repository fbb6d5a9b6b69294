//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
//!
//! Every criterion also returns a record of its deterministic results (verdicts,
//! certificates, dumps). The last criterion recomputes all records under a
//! one-thread and an eight-thread pool and compares them byte for byte.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rcw_core::deciders::{decide_local_nrc, decide_local_rc, Certificate, Claim, Mode, SelTable, Verdict};
use rcw_core::equivariance::equivariant_sel_exists;
use rcw_core::fraisse::{self, FraisseStage, StageOutcome};
use rcw_core::modelzoo::{evaluate, make_model, ZooPrinciple};
use rcw_core::reductions::oracle::SeededOracle;
use rcw_core::reductions::{min_family_size, outdegree_bound_check, reduce, subsum_divisors, OracleFamily};
use rcw_core::selection::enumerate_structures;
use rcw_core::subgroups::{enumerate_subgroups, SubgroupFilter};
use rcw_core::verify::verify_certificate;
use rcw_core::{group_closure, Perm, SelectionStructure, SubsetCode};

/// Detail for the report line and the deterministic record.
struct Outcome {
    detail: String,
    record: String,
}

type Check = Result<Outcome, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializes")
}

fn verified(v: &Verdict, what: &str) -> Result<(), String> {
    let c = v.witness.as_ref().ok_or_else(|| format!("{what}: fails without a certificate"))?;
    verify_certificate(c).map_err(|r| format!("{what}: certificate rejected: {r}"))
}

fn rc_seven() -> Check {
    let t = Instant::now();
    let v = decide_local_rc(4, 7, Mode::Complete).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    ensure(v.holds(), || format!("rc(4,7) gave {}", v.kind))?;
    let classes = enumerate_subgroups(7, SubgroupFilter::FixedPointFree).map_err(|e| e.to_string())?;
    ensure(v.examined.len() == classes.len(), || {
        format!("{} groups examined, {} fixed-point-free classes", v.examined.len(), classes.len())
    })?;
    for (e, g) in v.examined.iter().zip(&classes) {
        let gens: Vec<String> = g.generators().iter().map(|p| p.to_string()).collect();
        ensure(e.generators == gens && !e.witness && g.is_fixed_point_free(), || {
            format!("examined entry {:?} does not match class {gens:?}", e.generators)
        })?;
    }
    ensure(elapsed < Duration::from_secs(600), || format!("took {elapsed:?}"))?;
    Ok(Outcome {
        detail: format!("rc(4,7) holds_at_bound, {} fixed-point-free classes examined, {elapsed:.2?}", classes.len()),
        record: json(&v),
    })
}

fn rc_matrix_four() -> Check {
    let mut record = String::new();
    let mut fails = Vec::new();
    for m in 3..=8 {
        let v = decide_local_rc(4, m, Mode::Complete).map_err(|e| e.to_string())?;
        let want_hold = m == 5 || m == 7;
        ensure(v.holds() == want_hold, || format!("m={m}: {}", v.kind))?;
        if !v.holds() {
            verified(&v, &format!("m={m}"))?;
            fails.push(m);
        }
        record.push_str(&json(&v));
    }
    Ok(Outcome { detail: format!("fails at {fails:?}, holds at [5, 7], all certificates verified"), record })
}

fn rc_matrix_two_and_six() -> Check {
    let mut record = String::new();
    for (m, want) in [(3, true), (4, false), (5, true)] {
        let v = decide_local_rc(2, m, Mode::Complete).map_err(|e| e.to_string())?;
        ensure(v.holds() == want, || format!("n=2 m={m}: {}", v.kind))?;
        if !want {
            verified(&v, &format!("n=2 m={m}"))?;
        }
        record.push_str(&json(&v));
    }
    let v = decide_local_rc(6, 7, Mode::CyclicOnly).map_err(|e| e.to_string())?;
    ensure(v.holds(), || format!("n=6 m=7 cyclic_only: {}", v.kind))?;
    record.push_str(&json(&v));
    Ok(Outcome { detail: "n=2: holds, fails, holds; n=6 m=7 cyclic_only holds_at_bound".into(), record })
}

fn nrc_loops() -> Check {
    let expect = [(2, 3, false), (2, 4, true), (2, 5, false), (2, 6, true), (3, 4, false), (3, 5, false), (3, 6, true)];
    let mut record = String::new();
    let mut verified_count = 0;
    for (m, k, want) in expect {
        let v = decide_local_nrc(m, k, 12, Mode::Complete).map_err(|e| e.to_string())?;
        ensure(v.holds() == want, || format!("m={m} k={k}: {}", v.kind))?;
        if !want {
            verified(&v, &format!("m={m} k={k}"))?;
            verified_count += 1;
        }
        record.push_str(&json(&v));
    }
    // a plausible but wrong witness: C_7 with the least selection
    let c7 = group_closure(7, &[Perm::parse_cycles(7, "(0 1 2 3 4 5 6)").unwrap()]).unwrap();
    let least = SelectionStructure::least(7, 4).unwrap();
    let bogus = Certificate::new(
        Claim::RcFailure { n: 4, m: 7 },
        &c7,
        SelTable::Explicit(least.entries().collect()),
        SubsetCode::full(7),
    );
    ensure(verify_certificate(&bogus).is_err(), || "near-miss certificate accepted".into())?;
    Ok(Outcome {
        detail: format!("7 verdicts at B=12 as expected, {verified_count} witnesses verified, near-miss rejected"),
        record,
    })
}

fn oracle_equivalence() -> Check {
    let perms: Vec<Perm> = (0..24).map(|r| Perm::unrank(4, r)).collect();
    let structures: Vec<SelectionStructure> = enumerate_structures(4, 2).map_err(|e| e.to_string())?.collect();
    ensure(structures.len() == 486, || format!("{} structures", structures.len()))?;
    // rc fails iff some structure has a fixed-point-free automorphism group
    let auts: Vec<Vec<&Perm>> = structures
        .iter()
        .map(|s| perms.iter().filter(|p| s.is_preserved_by(p)).collect())
        .collect();
    let fpf = |aut: &Vec<&Perm>| (0..4).all(|x| aut.iter().any(|p| !p.fixes_point(x)));
    let brute_fails = auts.iter().any(fpf);
    let v = decide_local_rc(2, 4, Mode::Complete).map_err(|e| e.to_string())?;
    ensure(v.holds() != brute_fails, || format!("decider {} but brute force fails={brute_fails}", v.kind))?;

    // every subgroup of S_4 is generated by two elements
    let mut seen = BTreeSet::new();
    let mut groups = Vec::new();
    for a in &perms {
        for b in &perms {
            let g = group_closure(4, &[a.clone(), b.clone()]).map_err(|e| e.to_string())?;
            let key: BTreeSet<usize> = g.elements().iter().map(|p| p.rank()).collect();
            if seen.insert(key) {
                groups.push(g);
            }
        }
    }
    ensure(groups.len() == 30, || format!("{} subgroups of S_4", groups.len()))?;
    let mut mismatches = 0;
    let mut pattern = String::new();
    for g in &groups {
        let brute = structures.iter().any(|s| g.generators().iter().all(|p| s.is_preserved_by(p)));
        let fast = equivariant_sel_exists(g, 2).map_err(|e| e.to_string())?.0;
        mismatches += usize::from(brute != fast);
        pattern.push(if fast { '1' } else { '0' });
    }
    ensure(mismatches == 0, || format!("{mismatches} mismatches over 30 subgroups"))?;
    Ok(Outcome {
        detail: format!("486 structures, rc(2,4) {} agrees; 30 subgroups of S_4, 0 mismatches", v.kind),
        record: format!("{}{pattern}", json(&v)),
    })
}

/// All multisets over `divs` (counts per divisor) with sum at most `max`.
fn multisets(divs: &[u64], max: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
    let Some((&d, rest)) = divs.split_first() else {
        out.push(cur.clone());
        return;
    };
    let used: u64 = cur.iter().sum();
    let mut c = 0;
    while used + c * d <= max {
        cur.extend(std::iter::repeat(d).take(c as usize));
        multisets(rest, max, cur, out);
        cur.truncate(cur.len() - c as usize);
        c += 1;
    }
}

/// Whether some sub-multiset of `sizes` sums to `q`.
fn reachable(sizes: &[u64], q: u64) -> bool {
    let mut can = vec![false; q as usize + 1];
    can[0] = true;
    for &s in sizes {
        for t in (s as usize..=q as usize).rev() {
            can[t] |= can[t - s as usize];
        }
    }
    can[q as usize]
}

fn subsum() -> Check {
    let t = Instant::now();
    let mut total = 0usize;
    let mut record = String::new();
    for (p, k) in [(2u64, 1u32), (3, 1), (2, 2), (2, 3), (3, 2), (2, 4), (3, 3)] {
        let q = p.pow(k);
        let divs: Vec<u64> = (0..=k).map(|i| p.pow(i)).collect();
        let mut all = Vec::new();
        multisets(&divs, q + 32, &mut Vec::new(), &mut all);
        let cases: Vec<Vec<u64>> = all.into_iter().filter(|m| m.iter().sum::<u64>() > q).collect();
        for sizes in &cases {
            ensure(reachable(sizes, q), || format!("q={q}: brute force finds no subsum in {sizes:?}"))?;
            let picked = subsum_divisors(p, k, sizes).map_err(|e| format!("q={q} {sizes:?}: {e}"))?;
            ensure(picked.iter().sum::<u64>() == q, || format!("q={q}: {picked:?} from {sizes:?}"))?;
            let mut pool = sizes.clone();
            for s in &picked {
                let i = pool.iter().position(|x| x == s).ok_or_else(|| format!("{picked:?} not inside {sizes:?}"))?;
                pool.swap_remove(i);
            }
        }
        record.push_str(&format!("{q}:{} ", cases.len()));
        total += cases.len();
    }
    let elapsed = t.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(Outcome { detail: format!("{total} multisets, greedy exact and matching brute force, {elapsed:.2?}"), record })
}

fn random_family(n: usize, seed: u64) -> Vec<Vec<u32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9) ^ n as u64);
    let count = rng.gen_range(10..=40);
    let sizes: Vec<usize> = (0..count).map(|_| rng.gen_range(n + 1..=n + 8)).collect();
    let mut atoms: Vec<u32> = (0..sizes.iter().sum::<usize>() as u32 * 3).collect();
    atoms.shuffle(&mut rng);
    let mut next = atoms.into_iter();
    sizes.iter().map(|&s| next.by_ref().take(s).collect()).collect()
}

fn reductions() -> Check {
    let mut record = String::new();
    let mut detail = Vec::new();
    for n in [2usize, 3, 4, 6] {
        let runs: Vec<Result<(usize, usize, String), String>> = (0..1000u64)
            .into_par_iter()
            .map(|seed| {
                let members = random_family(n, seed);
                let mut fam = OracleFamily::new(members.clone(), n, SeededOracle::new(seed)).map_err(|e| e.to_string())?;
                let sel = reduce(n, &mut fam).map_err(|e| format!("n={n} seed={seed}: {e}"))?;
                sel.validate(&members).map_err(|e| format!("n={n} seed={seed}: {e}"))?;
                if members.len() >= min_family_size(n) && sel.is_empty() {
                    return Err(format!("n={n} seed={seed}: empty selection on {} members", members.len()));
                }
                Ok((sel.len(), members.len(), json(&sel)))
            })
            .collect();
        let mut ratios = Vec::new();
        for r in runs {
            let (chosen, members, text) = r?;
            ratios.push(chosen as f64 / members as f64);
            record.push_str(&text);
        }
        ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
        detail.push(format!("n={n} median coverage {:.2}", ratios[ratios.len() / 2]));
    }
    for k in 0..=50u64 {
        ensure(outdegree_bound_check(2 * k + 3, k), || format!("outdegree bound fails at k'={k}"))?;
    }
    Ok(Outcome {
        detail: format!("4000 runs valid and non-empty ({}); outdegree bound holds for k' <= 50", detail.join(", ")),
        record,
    })
}

fn build_to_four() -> Result<Vec<FraisseStage>, String> {
    let mut stages = vec![FraisseStage::empty(2).map_err(|e| e.to_string())?];
    for _ in 0..4 {
        let prev = stages.last().unwrap();
        match fraisse::build_stage_capped(prev, 2, 10_000).map_err(|e| e.to_string())? {
            StageOutcome::Complete(s) => stages.push(s),
            StageOutcome::Partial(p) => return Err(format!("cap reached at {} atoms", p.atom_count())),
        }
    }
    Ok(stages)
}

fn fraisse_stages() -> Check {
    let stages = build_to_four()?;
    let again = build_to_four()?;
    let mut record = String::new();
    let mut sets = 0;
    let mut grounds = 0;
    for (st, other) in stages.iter().zip(&again) {
        let dump = fraisse::dump_stage(st);
        ensure(dump == fraisse::dump_stage(other), || format!("stage {} dumps differ", st.stage_index()))?;
        let scan = fraisse::scan_sel(st, 2_000_000).map_err(|e| e.to_string())?;
        ensure(scan.violations.is_empty(), || format!("stage {}: {:?}", st.stage_index(), &scan.violations[..1]))?;
        sets += scan.sets_checked;
        // the horizon is empty before stage 2
        if st.stage_index() >= 2 {
            let ext = fraisse::check_extension_property(st).map_err(|e| e.to_string())?;
            ensure(ext.misses.is_empty(), || format!("stage {}: {} extension misses", st.stage_index(), ext.misses.len()))?;
            grounds += ext.grounds_checked;
        }
        record.push_str(&dump);
    }
    let atoms = stages.last().unwrap().atom_count();
    ensure(atoms >= 200, || format!("only {atoms} atoms"))?;
    Ok(Outcome {
        detail: format!(
            "stages 0..4 reach {atoms} atoms; Sel scans clean ({sets} sets), 0 extension misses at stages 2..4 ({grounds} grounds); dumps identical"
        ),
        record,
    })
}

fn zoo() -> Check {
    let mut record = String::new();
    let check = |v: &rcw_core::modelzoo::ZooVerdict, what: &str| -> Result<(), String> {
        if let Some(c) = &v.certificate {
            verify_certificate(c).map_err(|r| format!("{what}: certificate rejected: {r}"))?;
        } else if !v.holds() {
            return Err(format!("{what}: fails without a certificate"));
        }
        Ok(())
    };
    for q in [2usize, 3, 4] {
        let m = make_model("vlines", &q.to_string(), 64, &[]).map_err(|e| e.to_string())?;
        for n in 1..=12 {
            let v = evaluate(&m, ZooPrinciple::NrcFin(n), 6).map_err(|e| e.to_string())?;
            ensure(v.holds() == (n % q == 0), || format!("vlines({q}) nrc_fin({n}): {}", v.kind))?;
            check(&v, &format!("vlines({q}) n={n}"))?;
            record.push_str(&json(&v));
        }
    }
    let vfin = make_model("vfin", "6", 64, &[]).map_err(|e| e.to_string())?;
    for n in 1..=7 {
        let need: usize = vfin.blocks.iter().map(|b| b.size).filter(|&s| s <= n).sum();
        let c = evaluate(&vfin, ZooPrinciple::CN(n), need).map_err(|e| e.to_string())?;
        ensure(c.holds(), || format!("vfin c_n({n}) fails with budget {need}"))?;
        let r = evaluate(&vfin, ZooPrinciple::NrcFin(n), 64).map_err(|e| e.to_string())?;
        ensure(!r.holds(), || format!("vfin nrc_fin({n}) holds"))?;
        check(&r, &format!("vfin n={n}"))?;
        record.push_str(&json(&c));
        record.push_str(&json(&r));
    }
    let bfm = make_model("bfm", "", 64, &[]).map_err(|e| e.to_string())?;
    for n in 1..=6 {
        let v = evaluate(&bfm, ZooPrinciple::NrcFin(n), 8).map_err(|e| e.to_string())?;
        ensure(!v.holds(), || format!("bfm nrc_fin({n}) holds"))?;
        check(&v, &format!("bfm n={n}"))?;
        record.push_str(&json(&v));
    }
    Ok(Outcome {
        detail: "vlines(2,3,4) nrc_fin holds iff q | n for n <= 12; vfin c_n holds and nrc_fin fails for n <= 7; bfm nrc_fin fails for n <= 6".into(),
        record,
    })
}

type Criterion = (usize, fn() -> Check);

const CRITERIA: [Criterion; 9] = [
    (1, rc_seven),
    (2, rc_matrix_four),
    (3, rc_matrix_two_and_six),
    (4, nrc_loops),
    (5, oracle_equivalence),
    (6, subsum),
    (7, reductions),
    (8, fraisse_stages),
    (9, zoo),
];

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool")
}

fn main() {
    let mut failed = 0;
    let mut records_eight = Vec::new();
    let eight = pool(8);
    for (id, f) in CRITERIA {
        match eight.install(f) {
            Ok(o) => {
                println!("criterion {id}: PASS {}", o.detail);
                records_eight.push(Some(o.record));
            }
            Err(e) => {
                println!("criterion {id}: FAIL {e}");
                records_eight.push(None);
                failed += 1;
            }
        }
    }

    let one = pool(1);
    let mut diffs = Vec::new();
    for ((id, f), eight_rec) in CRITERIA.iter().zip(&records_eight) {
        let one_rec = one.install(f).ok().map(|o| o.record);
        if one_rec != *eight_rec {
            diffs.push(*id);
        }
    }
    if diffs.is_empty() {
        println!("criterion 10: PASS results of criteria 1..9 identical under 1 and 8 threads");
    } else {
        println!("criterion 10: FAIL results differ between 1 and 8 threads for criteria {diffs:?}");
        failed += 1;
    }

    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
