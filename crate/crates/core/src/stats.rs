//! Statistical toolkit for comparing sessions: Pearson correlation, one-way
//! repeated-measures ANOVA, paired t-tests, and the Bonferroni correction.
//!
//! Sphericity is not corrected; the ANOVA reports the plain within-subjects
//! F with df `(k-1, (k-1)(n-1))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricSet;
use crate::special::{f_sf, t_sf_two_sided};

/// One participant-session observation: the unit of statistical comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub participant_id: String,
    pub session_label: String,
    pub metrics: MetricSet,
    /// Self-reported stress on a 0-10 visual analogue scale, when collected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_report: Option<f64>,
}

impl SessionRecord {
    pub fn validate(&self) -> Result<()> {
        if let Some(score) = self.self_report {
            if !(0.0..=10.0).contains(&score) {
                return Err(Error::InvalidSpec(format!(
                    "self_report {score} outside the 0-10 scale"
                )));
            }
        }
        self.metrics.validate()
    }
}

/// Product-moment correlation coefficient in `[-1, 1]`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::TooShort {
            got: x.len(),
            need: 3,
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantSeries);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Result of the one-way repeated-measures ANOVA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f: f64,
    pub df_effect: usize,
    pub df_error: usize,
    pub p: f64,
    pub partial_eta_sq: f64,
}

/// One-way repeated-measures ANOVA over a complete participants-by-conditions
/// table (`table[i][j]` = participant `i` under condition `j`).
///
/// The within-subjects decomposition absorbs per-participant offsets:
/// `F = MS_conditions / MS_error` with df `(k-1, (k-1)(n-1))` and
/// `partial eta^2 = SS_conditions / (SS_conditions + SS_error)`.
pub fn rm_anova(table: &[Vec<f64>]) -> Result<AnovaResult> {
    let n = table.len();
    if n < 2 {
        return Err(Error::IncompleteTable(format!(
            "need at least 2 participants, got {n}"
        )));
    }
    let k = table[0].len();
    if k < 2 {
        return Err(Error::IncompleteTable(format!(
            "need at least 2 conditions, got {k}"
        )));
    }
    for (i, row) in table.iter().enumerate() {
        if row.len() != k {
            return Err(Error::IncompleteTable(format!(
                "participant {i} has {} conditions, expected {k}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::IncompleteTable(format!(
                "participant {i} has a non-finite value"
            )));
        }
    }

    let nf = n as f64;
    let kf = k as f64;
    let grand = table.iter().flatten().sum::<f64>() / (nf * kf);
    let subj_means: Vec<f64> = table.iter().map(|row| row.iter().sum::<f64>() / kf).collect();
    let cond_means: Vec<f64> = (0..k)
        .map(|j| table.iter().map(|row| row[j]).sum::<f64>() / nf)
        .collect();

    let ss_cond = nf * cond_means.iter().map(|c| (c - grand) * (c - grand)).sum::<f64>();
    // residual after removing subject and condition effects
    let mut ss_error = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let r = v - subj_means[i] - cond_means[j] + grand;
            ss_error += r * r;
        }
    }

    let df_effect = k - 1;
    let df_error = (k - 1) * (n - 1);
    if ss_error <= 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let f = (ss_cond / df_effect as f64) / (ss_error / df_error as f64);
    let p = f_sf(f, df_effect as f64, df_error as f64);
    let partial_eta_sq = if ss_cond + ss_error > 0.0 {
        ss_cond / (ss_cond + ss_error)
    } else {
        0.0
    };
    Ok(AnovaResult {
        f,
        df_effect,
        df_error,
        p: p.clamp(0.0, 1.0),
        partial_eta_sq,
    })
}

/// Result of a two-sided paired t-test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedT {
    pub t: f64,
    pub df: usize,
    pub p: f64,
}

/// Two-sided paired t-test on the per-participant differences.
pub fn paired_t(x: &[f64], y: &[f64]) -> Result<PairedT> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::TooShort { got: n, need: 2 });
    }
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let ss: f64 = diffs.iter().map(|d| (d - mean) * (d - mean)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    if sd == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let t = mean / (sd / (n as f64).sqrt());
    let df = n - 1;
    Ok(PairedT {
        t,
        df,
        p: t_sf_two_sided(t, df as f64).clamp(0.0, 1.0),
    })
}

/// Bonferroni adjustment: each p-value becomes `min(1, p * m)`.
pub fn bonferroni(p_values: &[f64], m: usize) -> Result<Vec<f64>> {
    if m < p_values.len() {
        return Err(Error::InvalidSpec(format!(
            "comparison count {m} smaller than the {} p-values",
            p_values.len()
        )));
    }
    for &p in p_values {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidSpec(format!("p-value {p} outside [0, 1]")));
        }
    }
    Ok(p_values.iter().map(|&p| (p * m as f64).min(1.0)).collect())
}

/// One row of the per-metric comparison report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAnovaRow {
    pub metric: String,
    pub df_effect: usize,
    pub df_error: usize,
    pub f: f64,
    pub p: f64,
    pub partial_eta_sq: f64,
    pub significant: bool,
}

/// One post-hoc pairwise comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostHocRow {
    pub metric: String,
    pub pair: (String, String),
    pub t: f64,
    pub df: usize,
    pub p_raw: f64,
    pub p_bonferroni: f64,
    pub significant: bool,
}

/// Significance-test report over every metric of a cohort, shaped like a
/// per-metric ANOVA table with Bonferroni-adjusted post-hoc pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub participants: Vec<String>,
    pub sessions: Vec<String>,
    pub anova: Vec<MetricAnovaRow>,
    pub post_hoc: Vec<PostHocRow>,
}

/// Assembles the complete participants-by-sessions table for one metric.
///
/// Fails with `IncompleteTable` when any participant misses any session.
fn metric_table(
    records: &[SessionRecord],
    participants: &[String],
    sessions: &[String],
    metric: &str,
) -> Result<Vec<Vec<f64>>> {
    let mut table = Vec::with_capacity(participants.len());
    for pid in participants {
        let mut row = Vec::with_capacity(sessions.len());
        for sid in sessions {
            let rec = records
                .iter()
                .find(|r| &r.participant_id == pid && &r.session_label == sid)
                .ok_or_else(|| {
                    Error::IncompleteTable(format!("participant {pid} misses session {sid}"))
                })?;
            row.push(rec.metrics.get(metric).expect("known metric name"));
        }
        table.push(row);
    }
    Ok(table)
}

/// Runs the comparison workflow over a cohort of session records: one
/// repeated-measures ANOVA per metric plus Bonferroni-corrected post-hoc
/// paired t-tests for every session pair, at the 0.05 level.
pub fn compare_sessions(records: &[SessionRecord]) -> Result<ComparisonReport> {
    let mut participants: Vec<String> = Vec::new();
    let mut sessions: Vec<String> = Vec::new();
    for rec in records {
        rec.validate()?;
        if !participants.contains(&rec.participant_id) {
            participants.push(rec.participant_id.clone());
        }
        if !sessions.contains(&rec.session_label) {
            sessions.push(rec.session_label.clone());
        }
    }
    participants.sort();
    sessions.sort();
    if participants.len() < 2 || sessions.len() < 2 {
        return Err(Error::IncompleteTable(format!(
            "need >= 2 participants x >= 2 sessions, got {} x {}",
            participants.len(),
            sessions.len()
        )));
    }

    let mut anova = Vec::with_capacity(MetricSet::NAMES.len());
    let mut post_hoc = Vec::new();
    let n_pairs = sessions.len() * (sessions.len() - 1) / 2;
    for &metric in &MetricSet::NAMES {
        let table = metric_table(records, &participants, &sessions, metric)?;
        let result = rm_anova(&table)?;
        anova.push(MetricAnovaRow {
            metric: metric.to_string(),
            df_effect: result.df_effect,
            df_error: result.df_error,
            f: result.f,
            p: result.p,
            partial_eta_sq: result.partial_eta_sq,
            significant: result.p < 0.05,
        });

        let mut raw = Vec::with_capacity(n_pairs);
        let mut tests = Vec::with_capacity(n_pairs);
        for a in 0..sessions.len() {
            for b in a + 1..sessions.len() {
                let xa: Vec<f64> = table.iter().map(|row| row[a]).collect();
                let xb: Vec<f64> = table.iter().map(|row| row[b]).collect();
                let test = paired_t(&xa, &xb)?;
                raw.push(test.p);
                tests.push((a, b, test));
            }
        }
        let adjusted = bonferroni(&raw, n_pairs)?;
        for ((a, b, test), p_adj) in tests.into_iter().zip(adjusted) {
            post_hoc.push(PostHocRow {
                metric: metric.to_string(),
                pair: (sessions[a].clone(), sessions[b].clone()),
                t: test.t,
                df: test.df,
                p_raw: test.p,
                p_bonferroni: p_adj,
                significant: p_adj < 0.05,
            });
        }
    }
    Ok(ComparisonReport {
        participants,
        sessions,
        anova,
        post_hoc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE_4X3: [[f64; 3]; 4] = [
        [30.1, 29.8, 29.5],
        [31.0, 30.7, 30.1],
        [29.9, 29.9, 29.4],
        [30.5, 30.1, 29.8],
    ];

    fn fixture_table() -> Vec<Vec<f64>> {
        FIXTURE_4X3.iter().map(|r| r.to_vec()).collect()
    }

    #[test]
    fn pearson_of_identity_and_negation() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.5 + 1.0).collect();
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let y: Vec<f64> = x.iter().map(|v| -2.0 * v + 7.0).collect();
        assert!((pearson(&x, &y).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_is_symmetric_and_affine_invariant() {
        let x = vec![1.0, 4.0, 2.0, 8.0, 5.0, 7.0];
        let y = vec![2.0, 3.0, 1.5, 6.0, 5.5, 6.5];
        let r = pearson(&x, &y).unwrap();
        assert!((pearson(&y, &x).unwrap() - r).abs() < 1e-12);
        let xs: Vec<f64> = x.iter().map(|v| 3.5 * v - 20.0).collect();
        assert!((pearson(&xs, &y).unwrap() - r).abs() < 1e-9);
    }

    #[test]
    fn pearson_rejects_constant_series() {
        let x = vec![1.0, 1.0, 1.0, 1.0];
        let y = vec![1.0, 2.0, 3.0, 4.0];
        assert!(matches!(pearson(&x, &y), Err(Error::ConstantSeries)));
    }

    /// Brute-force oracle: sums of squares straight from the definitions,
    /// computed over explicit loops with no shared code.
    fn anova_oracle(table: &[Vec<f64>]) -> (f64, f64, f64) {
        let n = table.len();
        let k = table[0].len();
        let total: f64 = table.iter().flatten().sum();
        let grand = total / (n * k) as f64;
        let mut ss_total = 0.0;
        for row in table {
            for &v in row {
                ss_total += (v - grand).powi(2);
            }
        }
        let mut ss_subj = 0.0;
        for row in table {
            let m = row.iter().sum::<f64>() / k as f64;
            ss_subj += k as f64 * (m - grand).powi(2);
        }
        let mut ss_cond = 0.0;
        for j in 0..k {
            let m = table.iter().map(|r| r[j]).sum::<f64>() / n as f64;
            ss_cond += n as f64 * (m - grand).powi(2);
        }
        let ss_err = ss_total - ss_subj - ss_cond;
        let f = (ss_cond / (k - 1) as f64) / (ss_err / ((k - 1) * (n - 1)) as f64);
        let eta = ss_cond / (ss_cond + ss_err);
        (f, eta, ss_err)
    }

    #[test]
    fn rm_anova_matches_brute_force_oracle() {
        let table = fixture_table();
        let result = rm_anova(&table).unwrap();
        let (f_oracle, eta_oracle, _) = anova_oracle(&table);
        assert!((result.f - f_oracle).abs() < 1e-9, "{} vs {f_oracle}", result.f);
        assert!((result.partial_eta_sq - eta_oracle).abs() < 1e-9);
        // frozen reference values computed independently
        assert!((result.f - 34.22448979592766).abs() < 1e-7);
        assert!((result.p - 0.0005234527699118582).abs() < 1e-10);
        assert!((result.partial_eta_sq - 0.9194078947368622).abs() < 1e-9);
        assert_eq!((result.df_effect, result.df_error), (2, 6));
    }

    #[test]
    fn rm_anova_df_for_twelve_by_three() {
        let table: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![i as f64, i as f64 + 0.5 + 0.01 * i as f64, i as f64 - 0.3])
            .collect();
        let result = rm_anova(&table).unwrap();
        assert_eq!((result.df_effect, result.df_error), (2, 22));
    }

    #[test]
    fn rm_anova_identical_conditions() {
        // rows constant across conditions, but differing between subjects:
        // both condition and error SS vanish
        let table = vec![vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0]];
        assert!(matches!(rm_anova(&table), Err(Error::DegenerateVariance)));

        // within-subject noise but identical condition means: F nearly 0
        let table = vec![
            vec![1.0, 1.1, 0.9],
            vec![2.1, 1.9, 2.0],
            vec![1.4, 1.5, 1.6],
        ];
        let result = rm_anova(&table).unwrap();
        assert!(result.f < 1e-12, "{}", result.f);
    }

    #[test]
    fn rm_anova_invariant_under_subject_and_global_shifts() {
        let table = fixture_table();
        let base = rm_anova(&table).unwrap();
        let mut shifted = table.clone();
        for (i, row) in shifted.iter_mut().enumerate() {
            for v in row.iter_mut() {
                *v += 5.0 + i as f64 * 3.0;
            }
        }
        let moved = rm_anova(&shifted).unwrap();
        assert!((base.f - moved.f).abs() < 1e-6 * base.f);
    }

    #[test]
    fn rm_anova_ragged_table_rejected() {
        let table = vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0]];
        assert!(matches!(rm_anova(&table), Err(Error::IncompleteTable(_))));
    }

    #[test]
    fn paired_t_matches_frozen_reference() {
        let x = [5.1, 4.8, 5.6, 5.3, 4.9, 5.2];
        let y = [4.6, 4.9, 5.1, 4.8, 4.7, 4.9];
        let result = paired_t(&x, &y).unwrap();
        assert_eq!(result.df, 5);
        assert!((result.t - 3.230096904360715).abs() < 1e-9);
        assert!((result.p - 0.023203328526892757).abs() < 1e-9);
    }

    #[test]
    fn paired_t_degenerate_differences() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!(matches!(paired_t(&x, &x), Err(Error::ZeroVariance)));
        // constant nonzero differences have zero deviation variance as well
        let y = [0.0, 1.0, 2.0, 3.0];
        assert!(matches!(paired_t(&x, &y), Err(Error::ZeroVariance)));
    }

    #[test]
    fn bonferroni_scales_and_clamps() {
        assert_eq!(bonferroni(&[0.01], 3).unwrap(), vec![0.03]);
        assert_eq!(bonferroni(&[0.5], 3).unwrap(), vec![1.0]);
        // never decreases, never exceeds 1, order preserved
        let ps = [0.001, 0.02, 0.2, 0.9];
        let adj = bonferroni(&ps, 4).unwrap();
        for (p, a) in ps.iter().zip(&adj) {
            assert!(a >= p && *a <= 1.0);
        }
        for w in adj.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn bonferroni_rejects_small_m() {
        assert!(bonferroni(&[0.1, 0.2], 1).is_err());
    }

    fn cohort_records() -> Vec<SessionRecord> {
        let mut records = Vec::new();
        for (i, row) in FIXTURE_4X3.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let mut values = [0.0f64; 16];
                for (slot, scale) in values.iter_mut().zip(1..) {
                    *slot = v * scale as f64 * 0.1;
                }
                let metrics = MetricSet {
                    TD: values[0],
                    STV: values[1],
                    SDSTV: values[2].abs(),
                    SDTV: values[3].abs(),
                    TD_n: values[4],
                    STV_n: values[5],
                    SDSTV_n: values[6].abs(),
                    SDTV_n: values[7].abs(),
                    TD_L: values[8],
                    STV_L: values[9],
                    SDSTV_L: values[10].abs(),
                    SDTV_L: values[11].abs(),
                    TD_Ln: values[12],
                    STV_Ln: values[13],
                    SDSTV_Ln: values[14].abs(),
                    SDTV_Ln: values[15].abs(),
                };
                records.push(SessionRecord {
                    participant_id: format!("P{i}"),
                    session_label: ["Rest", "MathEasy", "MathHard"][j].to_string(),
                    metrics,
                    self_report: Some(j as f64 * 2.0),
                });
            }
        }
        records
    }

    #[test]
    fn compare_sessions_rows_match_direct_anova() {
        let records = cohort_records();
        let report = compare_sessions(&records).unwrap();
        assert_eq!(report.anova.len(), 16);
        assert_eq!(report.post_hoc.len(), 16 * 3);

        // the TD row must equal rm_anova run by hand on the TD table
        let table: Vec<Vec<f64>> = (0..4)
            .map(|i| {
                ["MathEasy", "MathHard", "Rest"]
                    .iter()
                    .map(|s| {
                        records
                            .iter()
                            .find(|r| {
                                r.participant_id == format!("P{i}") && &r.session_label == s
                            })
                            .unwrap()
                            .metrics
                            .TD
                    })
                    .collect()
            })
            .collect();
        let direct = rm_anova(&table).unwrap();
        let row = &report.anova[0];
        assert_eq!(row.metric, "TD");
        assert_eq!(row.f, direct.f);
        assert_eq!(row.p, direct.p);
    }

    #[test]
    fn compare_sessions_requires_complete_cohort() {
        let mut records = cohort_records();
        records.remove(0);
        assert!(matches!(
            compare_sessions(&records),
            Err(Error::IncompleteTable(_))
        ));

        let single: Vec<SessionRecord> = cohort_records()
            .into_iter()
            .filter(|r| r.participant_id == "P0")
            .collect();
        assert!(matches!(
            compare_sessions(&single),
            Err(Error::IncompleteTable(_))
        ));
    }
}
