use crate::model::{in_forecast_window, Alarm};
use crate::telemetry::{AccidentRecord, AccidentType, N_TYPES};

/// Alarm tallies against the accident reference.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AlarmTally {
    pub true_forecasts: usize,
    pub false_alarms: usize,
    /// Accidents with at least one true forecast, per type.
    pub forecasted: [usize; N_TYPES],
    /// Accidents without any true forecast, per type.
    pub missed: [usize; N_TYPES],
}

impl AlarmTally {
    pub fn missed_total(&self) -> usize {
        self.missed.iter().sum()
    }
}

/// An alarm is a true forecast iff an accident of the same type on the same
/// well starts within 6 h after it; every other alarm is false.
pub fn alarm_accounting(alarms: &[Alarm], accidents: &[AccidentRecord]) -> AlarmTally {
    let mut tally = AlarmTally::default();
    let mut hit = vec![false; accidents.len()];
    for alarm in alarms {
        let mut any = false;
        for (k, acc) in accidents.iter().enumerate() {
            if acc.well_id == alarm.well_id
                && acc.accident_type == alarm.accident_type
                && in_forecast_window(alarm.time, acc.start_time)
            {
                hit[k] = true;
                any = true;
            }
        }
        if any {
            tally.true_forecasts += 1;
        } else {
            tally.false_alarms += 1;
        }
    }
    for (acc, &h) in accidents.iter().zip(&hit) {
        let t = acc.accident_type.index();
        if h {
            tally.forecasted[t] += 1;
        } else {
            tally.missed[t] += 1;
        }
    }
    tally
}

/// Per-type name/value pairs for reports.
pub fn per_type<T: Copy>(values: &[T; N_TYPES]) -> impl Iterator<Item = (AccidentType, T)> + '_ {
    AccidentType::ALL.iter().map(move |&t| (t, values[t.index()]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::telemetry::Timestamp;

    const H: i64 = 3600;

    fn alarm(well: &str, t: AccidentType, at: i64) -> Alarm {
        Alarm {
            well_id: well.into(),
            time: Timestamp(at),
            accident_type: t,
            probability: 0.9,
        }
    }

    #[test]
    fn rule_examples() {
        let accs = [AccidentRecord {
            well_id: "w".into(),
            accident_type: AccidentType::MudLoss,
            start_time: Timestamp(20 * H),
        }];
        let stuck_acc = [AccidentRecord {
            accident_type: AccidentType::Stuck,
            ..accs[0].clone()
        }];
        let a = [alarm("w", AccidentType::Stuck, 17 * H)];
        assert_eq!(alarm_accounting(&a, &stuck_acc).true_forecasts, 1);
        let t = alarm_accounting(&a, &accs);
        assert_eq!((t.true_forecasts, t.false_alarms), (0, 1));
        assert_eq!(t.missed[AccidentType::MudLoss.index()], 1);
        let early = [alarm("w", AccidentType::MudLoss, 10 * H)];
        assert_eq!(alarm_accounting(&early, &accs).false_alarms, 1);
    }
}
