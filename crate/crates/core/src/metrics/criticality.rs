use super::ParamsError;
use crate::domain::{CriticalPolicy, CriticalityParams, DependencyReport, SignalVector};

/// Weighted log-ratio criticality in [0, 1]:
///
/// `sum_i a_i * log(1 + S_i) / log(1 + max(S_i, T_i))  /  sum_i a_i`
///
/// Each per-signal ratio grows with the signal and saturates at 1 once the
/// signal reaches its threshold. Signals named in `params` but missing from
/// `signals` count as 0; signals not named in `params` are ignored.
pub fn criticality_score(signals: &SignalVector, params: &CriticalityParams) -> Result<f64, ParamsError> {
    criticality_score_with(signals, params, f64::ln_1p)
}

/// Same aggregation with a caller-supplied `x -> log(1 + x)`. The ratio is
/// independent of the logarithm base.
pub fn criticality_score_with(
    signals: &SignalVector,
    params: &CriticalityParams,
    log1p: impl Fn(f64) -> f64,
) -> Result<f64, ParamsError> {
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for (name, p) in &params.signals {
        if !(p.weight.is_finite() && p.weight >= 0.0) {
            return Err(ParamsError::BadWeight(name.clone()));
        }
        if !(p.threshold.is_finite() && p.threshold > 0.0) {
            return Err(ParamsError::BadThreshold(name.clone()));
        }
        let s = signals.get(name);
        let ratio = log1p(s) / log1p(s.max(p.threshold));
        numerator += p.weight * ratio;
        denominator += p.weight;
    }
    if denominator <= 0.0 {
        return Err(ParamsError::AllWeightsZero);
    }
    Ok((numerator / denominator).clamp(0.0, 1.0))
}

/// A project is critical when its score reaches the score threshold or its
/// transitive dependents reach the dependents threshold.
pub fn is_critical(criticality: f64, report: &DependencyReport, policy: &CriticalPolicy) -> bool {
    criticality >= policy.score_threshold || report.transitive_dependents >= policy.dependents_threshold
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::SignalParams;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn params(spec: &[(&str, f64, f64)]) -> CriticalityParams {
        CriticalityParams {
            signals: spec
                .iter()
                .map(|(n, w, t)| (n.to_string(), SignalParams { weight: *w, threshold: *t }))
                .collect(),
            critical_policy: CriticalPolicy::default(),
        }
    }

    fn signals(spec: &[(&str, f64)]) -> SignalVector {
        let mut v = SignalVector::new();
        for (n, x) in spec {
            v.insert(*n, *x).unwrap();
        }
        v
    }

    #[test]
    fn all_zero_signals() {
        let p = CriticalityParams::default();
        assert_eq!(criticality_score(&SignalVector::new(), &p).unwrap(), 0.0);
    }

    #[test]
    fn all_at_threshold_is_exactly_one() {
        let p = CriticalityParams::default();
        let mut s = SignalVector::new();
        for (name, sp) in &p.signals {
            s.insert(name.clone(), sp.threshold).unwrap();
        }
        assert_eq!(criticality_score(&s, &p).unwrap(), 1.0);
        let mut above = SignalVector::new();
        for (name, sp) in &p.signals {
            above.insert(name.clone(), sp.threshold * 10.0).unwrap();
        }
        assert_eq!(criticality_score(&above, &p).unwrap(), 1.0);
    }

    #[test]
    fn single_signal_half() {
        let p = params(&[("a", 1.0, 99.0)]);
        let score = criticality_score(&signals(&[("a", 9.0)]), &p).unwrap();
        assert!((score - 0.5).abs() < 1e-12, "{score}");
    }

    #[test]
    fn weighted_pair() {
        // (1 * 0.5 + 3 * 1) / 4
        let p = params(&[("a", 1.0, 99.0), ("b", 3.0, 99.0)]);
        let score = criticality_score(&signals(&[("a", 9.0), ("b", 99.0)]), &p).unwrap();
        assert!((score - 0.875).abs() < 1e-12, "{score}");
    }

    #[test]
    fn zero_weights_and_bad_thresholds() {
        let p = params(&[("a", 0.0, 10.0)]);
        assert_eq!(criticality_score(&SignalVector::new(), &p), Err(ParamsError::AllWeightsZero));
        let p = params(&[("a", 1.0, 0.0)]);
        assert_eq!(
            criticality_score(&SignalVector::new(), &p),
            Err(ParamsError::BadThreshold("a".into()))
        );
    }

    #[test]
    fn unrelated_signals_ignored() {
        let p = params(&[("a", 1.0, 99.0)]);
        let with_extra = criticality_score(&signals(&[("a", 9.0), ("zzz", 1e9)]), &p).unwrap();
        let without = criticality_score(&signals(&[("a", 9.0)]), &p).unwrap();
        assert_eq!(with_extra, without);
    }

    #[test]
    fn critical_policy_disjuncts() {
        let policy = CriticalPolicy::default();
        let mut report = DependencyReport::empty("github:a/b");
        report.transitive_dependents = 10;
        assert!(is_critical(0.9, &report, &policy));
        assert!(!is_critical(0.5, &report, &policy));
        report.transitive_dependents = 10_000;
        assert!(is_critical(0.3, &report, &policy));
    }

    proptest! {
        #[test]
        fn bounded(values in proptest::collection::vec(0.0f64..1e9, 4), weights in proptest::collection::vec(0.0f64..10.0, 4)) {
            let names = ["a", "b", "c", "d"];
            let mut spec: BTreeMap<String, SignalParams> = BTreeMap::new();
            for (i, n) in names.iter().enumerate() {
                spec.insert(n.to_string(), SignalParams { weight: weights[i] + 0.01, threshold: 100.0 });
            }
            let p = CriticalityParams { signals: spec, critical_policy: CriticalPolicy::default() };
            let mut s = SignalVector::new();
            for (i, n) in names.iter().enumerate() {
                s.insert(*n, values[i]).unwrap();
            }
            let score = criticality_score(&s, &p).unwrap();
            prop_assert!((0.0..=1.0).contains(&score));
        }
    }
}
