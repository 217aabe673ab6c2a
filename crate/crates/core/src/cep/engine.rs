//! Tumbling-window evaluation over ordered sensor streams.

use super::{AggFn, CepRule, Condition, OutOfOrder};
use crate::model::{CompositeEvent, Fact, FactDomain, SensorReading, Timestamp};

#[derive(Debug, Clone)]
struct OpenWindow {
    index: u64,
    readings: Vec<SensorReading>,
}

/// Evaluates a fixed rule set over one ordered stream of readings.
///
/// Readings must arrive in non-decreasing timestamp order. A window closes
/// when the watermark (latest timestamp seen, advanced by readings and
/// flushes) moves past its end; closing evaluates the window and may emit a
/// composite event. The engine is transferable between threads but must be
/// fed sequentially.
#[derive(Debug, Clone)]
pub struct CepEngine {
    rules: Vec<CepRule>,
    open: Vec<Option<OpenWindow>>,
    watermark: Option<u64>,
}

impl CepEngine {
    pub fn new(rules: Vec<CepRule>) -> Self {
        let open = vec![None; rules.len()];
        CepEngine {
            rules,
            open,
            watermark: None,
        }
    }

    pub fn rules(&self) -> &[CepRule] {
        &self.rules
    }

    pub fn rule_by_name(&self, name: &str) -> Option<&CepRule> {
        self.rules.iter().find(|r| r.name() == name)
    }

    /// Latest timestamp seen, if any reading or flush arrived yet.
    pub fn watermark(&self) -> Option<Timestamp> {
        self.watermark.map(Timestamp::from_secs)
    }

    /// Feeds one reading. Windows strictly before the reading's own window
    /// close first (for every rule), then the reading joins the current
    /// window of each rule whose stream matches its property.
    pub fn advance(&mut self, reading: SensorReading) -> Result<Vec<CompositeEvent>, OutOfOrder> {
        let t = reading.timestamp().secs();
        if let Some(last_seen) = self.watermark {
            if t < last_seen {
                return Err(OutOfOrder {
                    sensor_id: reading.sensor_id().to_string(),
                    property: reading.property().to_string(),
                    timestamp: t,
                    last_seen,
                });
            }
        }
        self.watermark = Some(t);

        let mut events = Vec::new();
        for i in 0..self.rules.len() {
            let current_index = t / self.rules[i].window().width_secs;
            if self.open[i].as_ref().is_some_and(|w| w.index < current_index) {
                let window = self.open[i].take().expect("checked above");
                events.extend(evaluate_window(&self.rules[i], &window));
            }
            if self.rules[i].window().stream == reading.property() {
                self.open[i]
                    .get_or_insert_with(|| OpenWindow {
                        index: current_index,
                        readings: Vec::new(),
                    })
                    .readings
                    .push(reading.clone());
            }
        }
        Ok(events)
    }

    /// Closes and evaluates every open window ending at or before `now`.
    /// Idempotent for a given `now`; a flush earlier than the watermark is a
    /// no-op (the watermark never regresses).
    pub fn flush(&mut self, now: Timestamp) -> Vec<CompositeEvent> {
        let now = now.secs();
        self.watermark = Some(self.watermark.map_or(now, |w| w.max(now)));
        let mut events = Vec::new();
        for i in 0..self.rules.len() {
            let width = self.rules[i].window().width_secs;
            if self.open[i].as_ref().is_some_and(|w| (w.index + 1) * width <= now) {
                let window = self.open[i].take().expect("checked above");
                events.extend(evaluate_window(&self.rules[i], &window));
            }
        }
        events
    }
}

fn evaluate_window(rule: &CepRule, window: &OpenWindow) -> Option<CompositeEvent> {
    if window.readings.len() < rule.window().min_count {
        return None;
    }
    if !eval_condition(rule.condition(), &window.readings) {
        return None;
    }
    let attributes = rule
        .attributes()
        .iter()
        .map(|(name, agg)| (name.clone(), aggregate(agg.function, &window.readings)))
        .collect();
    let width = rule.window().width_secs;
    let event = CompositeEvent::new(
        rule.name(),
        attributes,
        Timestamp::from_secs(window.index * width),
        Timestamp::from_secs((window.index + 1) * width),
        rule.name(),
    )
    .expect("window bounds are ordered and attribute names are unique");
    Some(event)
}

fn eval_condition(cond: &Condition, readings: &[SensorReading]) -> bool {
    match cond {
        Condition::Cmp(c) => c.op.apply(aggregate(c.agg.function, readings), c.threshold),
        Condition::And(l, r) => eval_condition(l, readings) && eval_condition(r, readings),
        Condition::Or(l, r) => eval_condition(l, readings) || eval_condition(r, readings),
    }
}

/// Computes one aggregate over a window's readings. Windows are evaluated
/// only when they hold at least `min_count >= 1` readings, so the empty case
/// never reaches the numeric functions.
fn aggregate(function: AggFn, readings: &[SensorReading]) -> f64 {
    let values = readings.iter().map(|r| r.value());
    match function {
        AggFn::Count => readings.len() as f64,
        AggFn::Sum => values.sum(),
        AggFn::Avg => values.sum::<f64>() / readings.len() as f64,
        AggFn::Min => values.fold(f64::INFINITY, f64::min),
        AggFn::Max => values.fold(f64::NEG_INFINITY, f64::max),
        AggFn::Last => readings.last().map(|r| r.value()).unwrap_or(f64::NAN),
    }
}

/// Turns a composite event into a fact when its rule carries an EMIT clause.
/// The fact is stamped with the window end, the moment the event became true.
pub fn event_to_fact(rule: &CepRule, event: &CompositeEvent) -> Option<Fact> {
    let emit = rule.emit()?;
    let fact = Fact::new(
        emit.subject.clone(),
        emit.state.clone(),
        emit.cf,
        FactDomain::Sensor,
        event.window_end(),
    )
    .expect("emit subject and state are validated at parse time");
    Some(fact)
}
