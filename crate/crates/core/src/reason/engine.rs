//! Certainty-factor algebra, rule evaluation and forward chaining.

use super::InferenceRule;
use crate::model::{CertaintyFactor, Fact, FactDomain, Recommendation, Timestamp};
use std::collections::{BTreeMap, BTreeSet, HashSet};

/// State token given to facts asserted by fired rules, so one rule's
/// conclusion can feed another rule's antecedents.
pub const DERIVED_STATE: &str = "Inferred";

/// Combines two parallel pieces of evidence for the same conclusion:
/// a + b(1 - a).
///
/// The arguments are ordered by value before evaluating, which makes the
/// floating-point result bit-exact under argument swap; the final `min`
/// guards the sub-ulp rounding excursion above 1.0.
pub fn combine_cf(a: CertaintyFactor, b: CertaintyFactor) -> CertaintyFactor {
    let (lo, hi) = if a.value() <= b.value() {
        (a.value(), b.value())
    } else {
        (b.value(), a.value())
    };
    let combined = (hi + lo * (1.0 - hi)).min(1.0);
    CertaintyFactor::new(combined).expect("combination of values in [0,1] stays in [0,1]")
}

/// Facts keyed by (subject, state); re-assertion merges instead of
/// duplicating.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FactBase {
    facts: BTreeMap<(String, String), Fact>,
}

impl FactBase {
    pub fn new() -> Self {
        FactBase::default()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn get(&self, subject: &str, state: &str) -> Option<&Fact> {
        self.facts.get(&(subject.to_string(), state.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fact> {
        self.facts.values()
    }

    /// Asserts a fact. A fact already present under the same (subject,
    /// state) merges: CFs combine, the newest timestamp wins, the original
    /// domain is kept.
    pub fn assert_fact(&mut self, fact: Fact) {
        match self.facts.get_mut(&fact.key()) {
            None => {
                self.facts.insert(fact.key(), fact);
            }
            Some(existing) => {
                let merged = Fact::new(
                    existing.subject(),
                    existing.state(),
                    combine_cf(existing.cf(), fact.cf()),
                    existing.domain(),
                    existing.timestamp().max(fact.timestamp()),
                )
                .expect("merging valid facts yields a valid fact");
                *existing = merged;
            }
        }
    }
}

/// Builds the reasoner's input from the two ingestion paths. Duplicate
/// (subject, state) assertions merge via [`combine_cf`].
pub fn facts_from_pipeline(
    ik_facts: impl IntoIterator<Item = Fact>,
    sensor_facts: impl IntoIterator<Item = Fact>,
) -> FactBase {
    let mut base = FactBase::new();
    for fact in ik_facts.into_iter().chain(sensor_facts) {
        base.assert_fact(fact);
    }
    base
}

/// Checks a rule against the fact base. Fires only when every antecedent is
/// present; the firing CF is the rule CF times the weakest matched fact, and
/// the support lists the matched facts in antecedent order.
pub fn evaluate_rule(
    facts: &FactBase,
    rule: &InferenceRule,
) -> Option<(CertaintyFactor, Vec<Fact>)> {
    let mut support = Vec::with_capacity(rule.antecedents().len());
    for (subject, state) in rule.antecedents() {
        support.push(facts.get(subject, state)?.clone());
    }
    let weakest = support
        .iter()
        .map(|f| f.cf().value())
        .fold(1.0_f64, f64::min);
    let firing = CertaintyFactor::new(rule.rule_cf().value() * weakest)
        .expect("product of values in [0,1] stays in [0,1]");
    Some((firing, support))
}

/// Counters from one forward-chaining run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainStats {
    /// Evaluation passes over the rule list, including the final quiescent one.
    pub passes: usize,
    /// Passes that fired at least one rule.
    pub productive_passes: usize,
}

struct Conclusion {
    cf: CertaintyFactor,
    // Rule name -> that rule's category list; BTreeMap keeps assembly
    // canonical under rule-list permutation.
    categories_by_rule: BTreeMap<String, Vec<String>>,
    support_keys: BTreeSet<(String, String)>,
}

/// Runs all rules to fixpoint and returns the recommendations plus the
/// final fact base (inputs plus derived facts).
///
/// Each pass evaluates every not-yet-fired rule against a snapshot of the
/// fact base, then applies all firings at once in canonical (event, rule)
/// order. A rule contributes at most once per conclusion, so CFs cannot
/// inflate by re-firing, and the per-pass snapshot makes the outcome
/// independent of rule list order. Firing asserts a derived
/// (event, "Inferred") fact whose CF combines with any existing one.
pub fn forward_chain(
    facts: &FactBase,
    rules: &[InferenceRule],
) -> (Vec<Recommendation>, FactBase) {
    let (recommendations, final_facts, _) = forward_chain_with_stats(facts, rules);
    (recommendations, final_facts)
}

pub fn forward_chain_with_stats(
    facts: &FactBase,
    rules: &[InferenceRule],
) -> (Vec<Recommendation>, FactBase, ChainStats) {
    let mut facts = facts.clone();
    let mut fired: HashSet<(String, String)> = HashSet::new();
    let mut conclusions: BTreeMap<String, Conclusion> = BTreeMap::new();
    let mut stats = ChainStats {
        passes: 0,
        productive_passes: 0,
    };

    loop {
        stats.passes += 1;
        // Evaluate against the pass-start snapshot.
        let mut firings: Vec<(&InferenceRule, CertaintyFactor, Vec<Fact>)> = Vec::new();
        for rule in rules {
            if fired.contains(&(rule.event().to_string(), rule.name().to_string())) {
                continue;
            }
            if let Some((cf, support)) = evaluate_rule(&facts, rule) {
                firings.push((rule, cf, support));
            }
        }
        if firings.is_empty() {
            break;
        }
        stats.productive_passes += 1;

        // Apply in canonical order so CF folds are permutation-independent.
        firings.sort_by(|(a, _, _), (b, _, _)| {
            (a.event(), a.name()).cmp(&(b.event(), b.name()))
        });
        for (rule, firing_cf, support) in firings {
            fired.insert((rule.event().to_string(), rule.name().to_string()));

            let entry = conclusions
                .entry(rule.event().to_string())
                .or_insert_with(|| Conclusion {
                    cf: firing_cf,
                    categories_by_rule: BTreeMap::new(),
                    support_keys: BTreeSet::new(),
                });
            if !entry.categories_by_rule.is_empty() {
                entry.cf = combine_cf(entry.cf, firing_cf);
            }
            entry
                .categories_by_rule
                .insert(rule.name().to_string(), rule.categories().to_vec());
            entry
                .support_keys
                .extend(support.iter().map(|f| f.key()));

            let derived_at = support
                .iter()
                .map(|f| f.timestamp())
                .max()
                .expect("antecedents are non-empty");
            let derived = Fact::new(
                rule.event(),
                DERIVED_STATE,
                firing_cf,
                FactDomain::Derived,
                derived_at,
            )
            .expect("rule conclusions are non-empty names");
            facts.assert_fact(derived);
        }

        // Each pass fires at least one of the at most |rules| distinct
        // (event, rule) pairs.
        assert!(
            stats.productive_passes <= rules.len(),
            "forward chaining exceeded its termination bound"
        );
    }

    let recommendations = conclusions
        .into_iter()
        .map(|(event, c)| assemble(&facts, event, c))
        .collect::<Vec<_>>();
    let mut recommendations = recommendations;
    recommendations.sort_by(|a, b| {
        b.issued_at()
            .cmp(&a.issued_at())
            .then_with(|| a.event().cmp(b.event()))
    });
    (recommendations, facts, stats)
}

/// Builds the final recommendation for one conclusion. Every field is
/// assembled from canonical orderings (rule names, fact keys, final CFs), so
/// the value is identical for any rule list permutation.
fn assemble(facts: &FactBase, event: String, c: Conclusion) -> Recommendation {
    let fired_rule = c
        .categories_by_rule
        .keys()
        .cloned()
        .collect::<Vec<_>>()
        .join(",");
    let mut categories: Vec<String> = Vec::new();
    for list in c.categories_by_rule.values() {
        for category in list {
            if !categories.contains(category) {
                categories.push(category.clone());
            }
        }
    }
    let supporting: Vec<(String, String, CertaintyFactor)> = c
        .support_keys
        .iter()
        .map(|(subject, state)| {
            let fact = facts
                .get(subject, state)
                .expect("support facts persist in the fact base");
            (subject.clone(), state.clone(), fact.cf())
        })
        .collect();
    let issued_at = supporting
        .iter()
        .filter_map(|(s, st, _)| facts.get(s, st).map(|f| f.timestamp()))
        .max()
        .unwrap_or(Timestamp::from_secs(0));
    Recommendation::new(event, categories, c.cf, fired_rule, supporting, issued_at)
        .expect("fired rules always provide categories and support")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reason::parse_rule;

    fn cf(v: f64) -> CertaintyFactor {
        CertaintyFactor::new(v).unwrap()
    }

    fn fact(subject: &str, state: &str, value: f64, t: u64) -> Fact {
        Fact::new(
            subject,
            state,
            cf(value),
            FactDomain::IndigenousKnowledge,
            Timestamp::from_secs(t),
        )
        .unwrap()
    }

    #[test]
    fn combine_identity_and_absorption_are_exact() {
        for value in [0.0, 0.1, 0.37, 0.5, 0.99, 1.0] {
            assert_eq!(combine_cf(cf(value), cf(0.0)).value(), value);
            assert_eq!(combine_cf(cf(0.0), cf(value)).value(), value);
            assert_eq!(combine_cf(cf(1.0), cf(value)).value(), 1.0);
            assert_eq!(combine_cf(cf(value), cf(1.0)).value(), 1.0);
        }
    }

    #[test]
    fn combine_frozen_values() {
        assert_eq!(combine_cf(cf(0.10), cf(0.10)).value(), 0.19);
        assert_eq!(combine_cf(cf(0.5), cf(0.5)).value(), 0.75);
    }

    #[test]
    fn combine_is_bit_exact_commutative() {
        let mut x = 0.123_f64;
        for _ in 0..1000 {
            x = (x * 9301.0 + 49297.0) % 1.0;
            let y = (x * 233.0 + 0.017) % 1.0;
            let ab = combine_cf(cf(x), cf(y)).value();
            let ba = combine_cf(cf(y), cf(x)).value();
            assert_eq!(ab.to_bits(), ba.to_bits(), "x={x} y={y}");
        }
    }

    const DROUGHT_RULE: &str = r#"
        RULE DroughtIndicators DOMAIN "INDIGENOUS KNOWLEDGE"
          IF (MugumoTree is Flowering AND MoonSize is Full AND
              InyosiBees is Hiding AND MigratoryBird is Flocking AND
              AverageDailyTemp is Low AND CloudCover is High AND
              WindSpeed is Low AND RelativeHumidity is High AND
              Evotranspiration is High)
          THEN Drought [METEOROLOGICAL && AGRICULTURAL && HYDROLOGICAL] CF 10%
    "#;

    fn drought_facts() -> FactBase {
        let pairs = [
            ("MugumoTree", "Flowering"),
            ("MoonSize", "Full"),
            ("InyosiBees", "Hiding"),
            ("MigratoryBird", "Flocking"),
            ("AverageDailyTemp", "Low"),
            ("CloudCover", "High"),
            ("WindSpeed", "Low"),
            ("RelativeHumidity", "High"),
            ("Evotranspiration", "High"),
        ];
        let mut base = FactBase::new();
        for (i, (s, st)) in pairs.iter().enumerate() {
            base.assert_fact(fact(s, st, 1.0, 1000 + i as u64));
        }
        base
    }

    #[test]
    fn nine_full_confidence_antecedents_fire_at_rule_cf() {
        let rule = parse_rule(DROUGHT_RULE).unwrap();
        let (firing, support) = evaluate_rule(&drought_facts(), &rule).unwrap();
        assert_eq!(firing.value(), 0.10);
        assert_eq!(support.len(), 9);
        assert_eq!(support[0].subject(), "MugumoTree");
    }

    #[test]
    fn missing_antecedent_blocks_firing() {
        let rule = parse_rule(DROUGHT_RULE).unwrap();
        let mut base = FactBase::new();
        let all = drought_facts();
        for f in all.iter().take(8) {
            base.assert_fact(f.clone());
        }
        assert_eq!(base.len(), 8);
        assert!(evaluate_rule(&base, &rule).is_none());
    }

    #[test]
    fn weakest_antecedent_scales_the_firing_cf() {
        let rule =
            parse_rule(r#"RULE r DOMAIN "X" IF A is B AND C is D AND E is F THEN Ev [MET] CF 0.10"#)
                .unwrap();
        let mut base = FactBase::new();
        base.assert_fact(fact("A", "B", 1.0, 1));
        base.assert_fact(fact("C", "D", 0.8, 2));
        base.assert_fact(fact("E", "F", 0.6, 3));
        let (firing, _) = evaluate_rule(&base, &rule).unwrap();
        assert_eq!(firing.value(), 0.10 * 0.6);
    }

    #[test]
    fn single_rule_yields_single_recommendation() {
        let rule = parse_rule(DROUGHT_RULE).unwrap();
        let (recs, finals) = forward_chain(&drought_facts(), &[rule]);
        assert_eq!(recs.len(), 1);
        let rec = &recs[0];
        assert_eq!(rec.event(), "Drought");
        assert_eq!(rec.cf().value(), 0.10);
        assert_eq!(
            rec.categories(),
            ["METEOROLOGICAL", "AGRICULTURAL", "HYDROLOGICAL"]
        );
        assert_eq!(rec.fired_rule(), "DroughtIndicators");
        assert_eq!(rec.supporting_facts().len(), 9);
        assert_eq!(finals.get("Drought", DERIVED_STATE).unwrap().cf().value(), 0.10);
    }

    #[test]
    fn two_rules_for_one_conclusion_combine() {
        let a = parse_rule(r#"RULE a DOMAIN "X" IF A is B THEN Drought [MET] CF 0.10"#).unwrap();
        let b = parse_rule(r#"RULE b DOMAIN "X" IF C is D THEN Drought [MET] CF 0.10"#).unwrap();
        let mut base = FactBase::new();
        base.assert_fact(fact("A", "B", 1.0, 1));
        base.assert_fact(fact("C", "D", 1.0, 2));
        let (recs, _) = forward_chain(&base, &[a, b]);
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].cf().value(), 0.19);
        assert_eq!(recs[0].fired_rule(), "a,b");
    }

    #[test]
    fn derived_facts_chain_into_later_rules() {
        let r1 = parse_rule(r#"RULE r1 DOMAIN "X" IF A is B THEN E1 [MET] CF 1.0"#).unwrap();
        let r2 = parse_rule(r#"RULE r2 DOMAIN "X" IF E1 is Inferred THEN E2 [MET] CF 1.0"#).unwrap();
        let mut base = FactBase::new();
        base.assert_fact(fact("A", "B", 1.0, 5));
        let (recs, finals, stats) = forward_chain_with_stats(&base, &[r1, r2]);
        assert_eq!(recs.len(), 2);
        let events: Vec<&str> = recs.iter().map(Recommendation::event).collect();
        assert!(events.contains(&"E1") && events.contains(&"E2"));
        assert!(finals.get("E2", DERIVED_STATE).is_some());
        assert_eq!(stats.productive_passes, 2);
    }

    #[test]
    fn rule_order_does_not_change_the_outcome() {
        // One conclusion fed by two rules plus a chained consumer: the
        // shape where naive immediate assertion becomes order-sensitive.
        let r1 = parse_rule(r#"RULE r1 DOMAIN "X" IF A is B THEN E1 [MET] CF 0.5"#).unwrap();
        let r2 = parse_rule(r#"RULE r2 DOMAIN "X" IF C is D THEN E1 [MET] CF 0.5"#).unwrap();
        let r3 = parse_rule(r#"RULE r3 DOMAIN "X" IF E1 is Inferred THEN E2 [AGR] CF 1.0"#).unwrap();
        let mut base = FactBase::new();
        base.assert_fact(fact("A", "B", 1.0, 1));
        base.assert_fact(fact("C", "D", 1.0, 2));

        let orders: [Vec<usize>; 6] = [
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ];
        let rules = [r1, r2, r3];
        let baseline = forward_chain(&base, &rules).0;
        for order in orders {
            let permuted: Vec<InferenceRule> =
                order.iter().map(|&i| rules[i].clone()).collect();
            assert_eq!(forward_chain(&base, &permuted).0, baseline, "{order:?}");
        }
    }

    #[test]
    fn refraction_prevents_self_reinforcement() {
        // The rule consumes its own conclusion; refraction lets it
        // contribute exactly once.
        let looped =
            parse_rule(r#"RULE loop DOMAIN "X" IF E is Inferred THEN E [MET] CF 0.5"#).unwrap();
        let seed = parse_rule(r#"RULE seed DOMAIN "X" IF A is B THEN E [MET] CF 0.5"#).unwrap();
        let mut base = FactBase::new();
        base.assert_fact(fact("A", "B", 1.0, 1));
        let (recs, _, stats) = forward_chain_with_stats(&base, &[seed, looped]);
        assert_eq!(recs.len(), 1);
        // seed fires at 0.5; loop then fires at 0.5 * 0.5 = 0.25.
        assert_eq!(recs[0].cf().value(), combine_cf(cf(0.5), cf(0.25)).value());
        assert!(stats.productive_passes <= 2);
    }

    #[test]
    fn pipeline_facts_merge_duplicates() {
        let base = facts_from_pipeline(
            vec![fact("MugumoTree", "Flowering", 0.5, 10)],
            vec![fact("MugumoTree", "Flowering", 0.5, 20)],
        );
        assert_eq!(base.len(), 1);
        let merged = base.get("MugumoTree", "Flowering").unwrap();
        assert_eq!(merged.cf().value(), 0.75);
        assert_eq!(merged.timestamp().secs(), 20);
        assert_eq!(merged.domain(), FactDomain::IndigenousKnowledge);
    }

    #[test]
    fn pipeline_facts_union_disjoint() {
        let base = facts_from_pipeline(
            vec![fact("A", "B", 1.0, 1)],
            vec![fact("C", "D", 1.0, 2)],
        );
        assert_eq!(base.len(), 2);
        assert!(facts_from_pipeline(vec![], vec![]).is_empty());
    }

    #[test]
    fn no_rules_no_recommendations() {
        let (recs, finals, stats) = forward_chain_with_stats(&drought_facts(), &[]);
        assert!(recs.is_empty());
        assert_eq!(finals.len(), 9);
        assert_eq!(stats.productive_passes, 0);
    }
}
