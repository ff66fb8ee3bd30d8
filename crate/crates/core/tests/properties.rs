mod common;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use atrium_core::sim::{actor, random_project, Driver};
use atrium_core::trace::{back_trace, impact_of, integrity_check};
use atrium_core::*;
use proptest::prelude::*;

fn valid_assumptions(st: &ProjectState) -> Vec<EntityId> {
    st.assumptions.values().filter(|a| a.validity == Validity::Valid).map(|a| a.id.clone()).collect()
}

fn states(st: &ProjectState) -> BTreeMap<EntityId, CfaState> {
    st.cfas.values().map(|c| (c.id.clone(), c.state)).collect()
}

/// CFAs whose state should flip: scan of the raw link list, no engine helpers.
fn reverted_oracle(st: &ProjectState, a: &EntityId) -> BTreeSet<EntityId> {
    st.links
        .values()
        .filter(|l| l.kind == LinkKind::AssumptionToCfa && &l.from == a)
        .filter(|l| st.cfas.get(&l.to).is_some_and(|c| c.state == CfaState::Processed))
        .map(|l| l.to.clone())
        .collect()
}

/// Forward closure over the raw link list from a set of start nodes.
fn reach(st: &ProjectState, start: &BTreeSet<EntityId>, kinds: &[LinkKind]) -> BTreeSet<EntityId> {
    let mut seen = start.clone();
    let mut q: VecDeque<EntityId> = start.iter().cloned().collect();
    while let Some(n) = q.pop_front() {
        for l in st.links.values() {
            if kinds.contains(&l.kind) && l.from == n && seen.insert(l.to.clone()) {
                q.push_back(l.to.clone());
            }
        }
    }
    seen
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn invalidation_touches_exactly_the_linked_processed_cfas(seed in any::<u64>(), ops in 20usize..160) {
        let mut engine = random_project(seed, ops);
        let candidates = valid_assumptions(engine.state());
        prop_assume!(!candidates.is_empty());
        let a = candidates[(seed % candidates.len() as u64) as usize].clone();
        let before = states(engine.state());
        let oracle = reverted_oracle(engine.state(), &a);
        let cmd = Command::InvalidateAssumption { assumption: a.clone(), reason: "property".into(), replacement: None };
        let applied = engine.apply(cmd, &actor()).unwrap();
        let OpResult::AssumptionInvalidated { reverted_cfas, .. } = applied.result else { unreachable!() };
        let after = states(engine.state());
        let changed: BTreeSet<EntityId> =
            before.iter().filter(|(id, s)| after[*id] != **s).map(|(id, _)| id.clone()).collect();
        prop_assert_eq!(&changed, &oracle);
        prop_assert_eq!(reverted_cfas.into_iter().collect::<BTreeSet<_>>(), oracle);
    }

    #[test]
    fn ledger_is_append_only_and_validity_monotone(seed in any::<u64>(), steps in 50usize..400) {
        let mut engine = Engine::new(atrium_core::sim::fuzz_config());
        let mut driver = Driver::new(seed);
        let mut successes = 0usize;
        let mut invalid: BTreeSet<EntityId> = BTreeSet::new();
        let mut seen_a: BTreeSet<EntityId> = BTreeSet::new();
        let mut seen_c: BTreeSet<EntityId> = BTreeSet::new();
        for _ in 0..steps {
            let (_, res) = driver.step(&mut engine);
            successes += res.is_ok() as usize;
            let st = engine.state();
            prop_assert!(seen_a.iter().all(|a| st.assumptions.contains_key(a)));
            prop_assert!(seen_c.iter().all(|c| st.clarifications.contains_key(c)));
            for a in &invalid {
                prop_assert_eq!(st.assumptions[a].validity, Validity::Invalid);
            }
            seen_a.extend(st.assumptions.keys().cloned());
            seen_c.extend(st.clarifications.keys().cloned());
            invalid.extend(st.assumptions.values().filter(|a| a.validity == Validity::Invalid).map(|a| a.id.clone()));
        }
        let st = engine.state();
        prop_assert_eq!(st.changelog.len(), successes);
        prop_assert_eq!(st.oplog.len(), successes);
        for (i, e) in st.changelog.iter().enumerate() {
            prop_assert_eq!(e.sequence, i as u64 + 1);
            prop_assert!(!e.implemented_changes.is_empty());
        }
    }

    #[test]
    fn replaying_the_oplog_reproduces_the_state(seed in any::<u64>(), ops in 1usize..200) {
        let engine = random_project(seed, ops);
        let st = engine.state();
        let replayed = Engine::replay(st.config.clone(), &st.oplog).unwrap();
        prop_assert_eq!(replayed.state().canonical_json(), st.canonical_json());
    }

    #[test]
    fn engine_states_pass_integrity(seed in any::<u64>(), ops in 1usize..300) {
        let engine = random_project(seed, ops);
        let v = integrity_check(engine.state());
        prop_assert!(v.is_empty(), "{:?}", v);
    }

    #[test]
    fn active_selection_covers_needy_cfas(seed in any::<u64>(), ops in 50usize..300) {
        let engine = random_project(seed, ops);
        let st = engine.state();
        let Some(sel) = st.active_selection() else { return Ok(()) };
        prop_assume!(st.current_iteration().is_some_and(|it| it.number == sel.iteration));
        // Coverage is checked when the selection is made; CFAs reverted
        // later are out of scope until they are re-analysed.
        let made_at = st.changelog.iter().rev().find(|e| e.implemented_changes.iter().any(|c| c.entity == sel.id)).unwrap().sequence;
        let touched_after: BTreeSet<&EntityId> = st.changelog.iter().filter(|e| e.sequence > made_at)
            .flat_map(|e| e.implemented_changes.iter().map(|c| &c.entity)).collect();
        for c in st.cfas.values() {
            let Some(an) = &c.analysis else { continue };
            if c.archived || c.state != CfaState::Processed || an.baseline_fulfills_dg || touched_after.contains(&c.id) {
                continue;
            }
            let covered = an.design_alternatives.iter().any(|d| sel.chosen_das.contains(d));
            prop_assert!(covered, "{} uncovered by {}", c.id, sel.id);
        }
    }

    #[test]
    fn impact_is_pure_and_matches_traversal(seed in any::<u64>(), ops in 20usize..200) {
        let engine = random_project(seed, ops);
        let st = engine.state();
        let hash = st.state_hash();
        for a in st.assumptions.keys() {
            let r = impact_of(st, a).unwrap();
            let cfas: BTreeSet<EntityId> = st.links.values()
                .filter(|l| l.kind == LinkKind::AssumptionToCfa && &l.from == a && st.cfas[&l.to].state == CfaState::Processed)
                .map(|l| l.to.clone()).collect();
            prop_assert_eq!(r.affected_cfas.iter().cloned().collect::<BTreeSet<_>>(), cfas.clone());
            let das = reach(st, &cfas, &[LinkKind::CfaToDa]);
            let das: BTreeSet<_> = das.difference(&cfas).cloned().collect();
            prop_assert_eq!(r.affected_das.iter().cloned().collect::<BTreeSet<_>>(), das.clone());
            let sels: BTreeSet<_> = reach(st, &das, &[LinkKind::DaToSelection]).difference(&das).cloned().collect();
            prop_assert_eq!(r.affected_selections.iter().cloned().collect::<BTreeSet<_>>(), sels);
            let clar: BTreeSet<_> = st.links.values()
                .filter(|l| l.kind == LinkKind::ClarificationToAssumption && &l.to == a).map(|l| l.from.clone()).collect();
            prop_assert_eq!(r.dependent_clarifications.iter().cloned().collect::<BTreeSet<_>>(), clar);
            let tasks: BTreeSet<_> = st.links.values()
                .filter(|l| l.kind == LinkKind::TaskToAssumption && &l.to == a).map(|l| l.from.clone()).collect();
            prop_assert_eq!(r.dependent_tasks.iter().cloned().collect::<BTreeSet<_>>(), tasks);
        }
        prop_assert_eq!(st.state_hash(), hash);
        prop_assert_eq!(st.changelog.len(), engine.state().changelog.len());
    }

    #[test]
    fn back_trace_is_reverse_reachability(seed in any::<u64>(), ops in 50usize..300) {
        let engine = random_project(seed, ops);
        let st = engine.state();
        for s in st.selections.keys() {
            let found = back_trace(st, s).unwrap();
            // brute force: every (A, CFA, DA) triple closing a chain to s
            let mut oracle: BTreeMap<EntityId, usize> = BTreeMap::new();
            for l3 in st.links.values().filter(|l| l.kind == LinkKind::DaToSelection && &l.to == s) {
                for l2 in st.links.values().filter(|l| l.kind == LinkKind::CfaToDa && l.to == l3.from) {
                    for l1 in st.links.values().filter(|l| l.kind == LinkKind::AssumptionToCfa && l.to == l2.from) {
                        *oracle.entry(l1.from.clone()).or_default() += 1;
                    }
                }
            }
            let got: BTreeMap<EntityId, usize> = found.iter().map(|t| (t.assumption.clone(), t.path_count)).collect();
            prop_assert_eq!(&got, &oracle);
            for t in &found {
                prop_assert_eq!(t.path.len(), 4);
                prop_assert_eq!(&t.path[0], s);
                prop_assert_eq!(&t.path[3], &t.assumption);
                prop_assert!(st.has_link(LinkKind::DaToSelection, &t.path[1], s));
                prop_assert!(st.has_link(LinkKind::CfaToDa, &t.path[2], &t.path[1]));
                prop_assert!(st.has_link(LinkKind::AssumptionToCfa, &t.path[3], &t.path[2]));
                // duality: the selection shows up in the assumption's impact
                // whenever the chain runs through a processed CFA
                if st.cfas[&t.path[2]].state == CfaState::Processed {
                    prop_assert!(impact_of(st, &t.assumption).unwrap().affected_selections.contains(s));
                }
            }
        }
    }
}

#[test]
fn invalidating_never_touches_unlinked_cfas() {
    for seed in 0..20u64 {
        let mut engine = random_project(seed, 120);
        let candidates = valid_assumptions(engine.state());
        let Some(a) = candidates.get(seed as usize % candidates.len().max(1)).cloned() else { continue };
        let linked: BTreeSet<EntityId> = engine.state().links_from(LinkKind::AssumptionToCfa, &a).map(|l| l.to.clone()).collect();
        let before = states(engine.state());
        common::ok(&mut engine, Command::InvalidateAssumption { assumption: a, reason: "r".into(), replacement: None });
        let after = states(engine.state());
        for (id, s) in before {
            if !linked.contains(&id) {
                assert_eq!(after[&id], s, "{id} changed without a link");
            }
        }
    }
}
