mod common;

use std::sync::Arc;

use rand::Rng;

use common::*;
use entroprover::balance::{balance, is_balanced_for_name};
use entroprover::engine::{Pool, Provability, Provenance, SystemKind};
use entroprover::expr::parse_form;
use entroprover::linform::{rat, LinForm, Rat, VarContext};
use entroprover::rules::Partition;
use entroprover::semantics::{evaluate, JointPmf, INEQ_TOL};
use entroprover::shannon::{check_shannon, ShannonVerdict};

fn abcdz() -> Arc<VarContext> {
    Arc::new(VarContext::new(["A", "B", "C", "D", "Z"]).unwrap())
}

fn zab_cd(ctx: &VarContext) -> Partition {
    Partition::from_names(ctx, "Z", &["A", "B"], &["C", "D"]).unwrap()
}

/// The premise as named elementals, read off its certificate.
fn certified_combo(pool: &Pool, premise: &LinForm) -> Vec<(String, Rat)> {
    let ShannonVerdict::Certificate(c) = check_shannon(premise).unwrap() else {
        panic!("premise is not Shannon-type");
    };
    let names: Vec<&str> = pool
        .entries()
        .iter()
        .filter(|e| e.provenance == Provenance::Elemental)
        .map(|e| e.name.as_str())
        .collect();
    c.terms
        .into_iter()
        .map(|(id, l)| (names[id].to_string(), l))
        .collect()
}

fn borrowed(combo: &[(String, Rat)]) -> Vec<(&str, Rat)> {
    combo.iter().map(|(n, l)| (n.as_str(), l.clone())).collect()
}

/// Premise for each system: the copy rule takes the balanced premise, the
/// residual rule the same premise plus `3H(Z|A,B,C,D)`.
fn system_premise(kind: SystemKind) -> LinForm {
    let ctx = abcdz();
    let p = parse_form(ZY_PREMISE, Some(&ctx)).unwrap();
    if kind.uses_copy_rule() {
        p
    } else {
        p.add(&parse_form("3H(Z|A,B,C,D) >= 0", Some(&ctx)).unwrap()).unwrap()
    }
}

fn derive_zy_statement(kind: SystemKind) -> (Pool, Pool) {
    let ctx = abcdz();
    let pool = Pool::init(ctx.clone()).unwrap();
    let premise = system_premise(kind);
    let combo = certified_combo(&pool, &premise);
    let (stepped, _) = pool.step(kind, &borrowed(&combo), &zab_cd(&ctx)).unwrap();
    let substituted = stepped.substitute("Z", "A").unwrap();
    (stepped, substituted)
}

#[test]
fn premises_have_the_restricted_balance_shape() {
    let zy = system_premise(SystemKind::Zy);
    let r = system_premise(SystemKind::R);
    assert!(is_balanced_for_name(&zy, "Z").unwrap());
    assert!(!is_balanced_for_name(&r, "Z").unwrap());
    for v in ["A", "B", "C", "D"] {
        assert!(is_balanced_for_name(&r, v).unwrap(), "{v}");
    }
    assert!(check_shannon(&r).unwrap().is_shannon());

    // The five-variable residual-rule premise has the same shape.
    let p5 = parse_form(MMRV_PREMISE, Some(&abcdz())).unwrap();
    assert!(!is_balanced_for_name(&p5, "Z").unwrap());
    for v in ["A", "B", "C", "D"] {
        assert!(is_balanced_for_name(&p5, v).unwrap(), "{v}");
    }
}

#[test]
fn every_system_proves_the_balanced_statement() {
    let target = parse_form(ZY_STATEMENT, None).unwrap();
    let balanced_target = balance(&target);
    for kind in SystemKind::ALL {
        let (_, pool) = derive_zy_statement(kind);
        let before = Pool::init(pool.ctx().clone()).unwrap();
        assert!(!before.provable(&balanced_target).unwrap().is_provable(), "{kind}");
        assert!(!before.provable(&target).unwrap().is_provable(), "{kind}");
        match pool.provable(&balanced_target).unwrap() {
            Provability::Provable(combo) => {
                assert!(combo.iter().any(|(n, _)| n.contains("step")), "{kind}: {combo:?}");
            }
            Provability::NotProvable(_) => panic!("{kind}: not provable"),
        }
        assert!(pool.provable(&target).unwrap().is_provable(), "{kind}");
    }
}

#[test]
fn both_rules_reach_the_same_conclusion() {
    let ctx = abcdz();
    let p = zab_cd(&ctx);
    let zy = SystemKind::Zy.infer(&system_premise(SystemKind::Zy), &p).unwrap();
    let r = SystemKind::R.infer(&system_premise(SystemKind::R), &p).unwrap();
    assert_eq!(zy, r);
    let zyb = SystemKind::ZyB.infer(&system_premise(SystemKind::ZyB), &p).unwrap();
    let rb = SystemKind::RB.infer(&system_premise(SystemKind::RB), &p).unwrap();
    assert_eq!(zyb, rb);
    assert_eq!(zyb, balance(&zy));
}

#[test]
fn residual_step_on_the_five_variable_premise() {
    let ctx = abcdz();
    let pool = Pool::init(ctx.clone()).unwrap();
    let premise = parse_form(MMRV_PREMISE, Some(&ctx)).unwrap();
    let combo = certified_combo(&pool, &premise);
    let (stepped, conclusion) = pool.step(SystemKind::R, &borrowed(&combo), &zab_cd(&ctx)).unwrap();
    let expected = parse_form(MMRV_STATEMENT, None).unwrap();
    let renamed = entroprover::rules::rename(&conclusion, "Z", "E").unwrap();
    assert!(renamed.same_inequality(&expected));
    assert!(stepped.contains_form(&conclusion));
    assert!(!check_shannon(&conclusion).unwrap().is_shannon());
    assert!(stepped.provable(&conclusion).unwrap().is_provable());
}

#[test]
fn steps_only_grow_the_pool() {
    let mut r = rng(11);
    let ctx = letters(4);
    let mut pool = Pool::init(ctx.clone()).unwrap();
    let probes: Vec<LinForm> = (0..20).map(|_| random_form(&mut r, &ctx, 5)).collect();
    let mut provable: Vec<bool> = probes.iter().map(|t| pool.provable(t).unwrap().is_provable()).collect();
    for step in 0..8 {
        let z = r.random_range(0..4);
        let others = ctx.full().without(z);
        let x = random_subset(&mut r, others);
        let part = Partition::new(&ctx, z, x, others.difference(x)).unwrap();
        let names: Vec<String> = pool.entries().iter().map(|e| e.name.clone()).collect();
        let combo: Vec<(&str, Rat)> = (0..3)
            .map(|_| (names[r.random_range(0..names.len())].as_str(), pos_rat(&mut r)))
            .collect();
        let kind = SystemKind::ALL[step % 4];
        let Ok((next, _)) = pool.step(kind, &combo, &part) else {
            continue;
        };
        assert!(next.len() >= pool.len());
        for e in pool.entries() {
            assert!(next.get(&e.name).is_some_and(|n| n.form == e.form));
        }
        for (t, was) in probes.iter().zip(provable.iter_mut()) {
            let now = next.provable(t).unwrap().is_provable();
            assert!(now || !*was, "provability lost at step {step}");
            *was = now;
        }
        pool = next;
    }
}

#[test]
fn derived_entries_hold_on_random_distributions() {
    let mut r = rng(5);
    for kind in SystemKind::ALL {
        let (stepped, substituted) = derive_zy_statement(kind);
        for pool in [&stepped, &substituted] {
            let n = pool.ctx().len();
            for _ in 0..100 {
                let sizes: Vec<usize> = (0..n).map(|_| r.random_range(2..=3)).collect();
                let p = JointPmf::random(pool.ctx().clone(), sizes, &mut r);
                let h = p.entropy_vector();
                for e in pool.entries().iter().filter(|e| e.provenance != Provenance::Given) {
                    let v = evaluate(&e.form, &h).unwrap();
                    assert!(v >= -INEQ_TOL, "{kind} {}: {v}", e.name);
                }
            }
        }
    }
}

#[test]
fn scripts_cover_all_four_systems() {
    for name in ["zy98.ips", "mmrv5.ips", "corollary2.ips"] {
        let text = std::fs::read_to_string(script_path(name)).unwrap();
        let t = entroprover::run_script(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(!t.is_empty());
    }
}

#[test]
fn pool_picks_reject_negative_multipliers() {
    let pool = Pool::init(letters(2)).unwrap();
    let name = pool.entries()[0].name.clone();
    assert!(pool.pick(&[(name.as_str(), rat(-1))]).is_err());
    assert!(pool.pick(&[("missing", rat(1))]).is_err());
}
