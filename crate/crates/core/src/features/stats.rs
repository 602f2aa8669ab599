use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use chrono::{DateTime, TimeZone, Utc};
use statrs::function::beta::beta_reg;

use crate::corpus::TweetRecord;
use crate::error::{Error, Result};
use crate::features::vector::{FeatureName, FeatureVector};
use crate::screening::ClassLabel;

/// Per-class means of one feature for one drug.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub drug: String,
    pub feature: FeatureName,
    pub rogue_mean: f64,
    pub nonrogue_mean: f64,
    pub rogue_n: usize,
    pub nonrogue_n: usize,
}

/// Arithmetic mean of every feature within each class.
pub fn group_means(vectors: &[FeatureVector], drug: &str) -> Result<Vec<GroupSummary>> {
    let mut sums = [[0.0f64; 13]; 2];
    let mut counts = [0usize; 2];
    for v in vectors {
        let class = match v.label {
            Some(ClassLabel::Rogue) => 0,
            Some(ClassLabel::NonRogue) => 1,
            None => {
                return Err(Error::InvalidArgument(format!(
                    "feature vector {} has no label",
                    v.tweet_id
                )));
            }
        };
        counts[class] += 1;
        for (s, x) in sums[class].iter_mut().zip(&v.values) {
            *s += x;
        }
    }
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::DegenerateGroup(format!(
            "{drug}: {} rogue and {} non-rogue tweets; both classes are required",
            counts[0], counts[1]
        )));
    }
    Ok(FeatureName::ALL
        .iter()
        .map(|&f| GroupSummary {
            drug: drug.to_string(),
            feature: f,
            rogue_mean: sums[0][f.index()] / counts[0] as f64,
            nonrogue_mean: sums[1][f.index()] / counts[1] as f64,
            rogue_n: counts[0],
            nonrogue_n: counts[1],
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub degrees_of_freedom: f64,
    pub p_value: f64,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Two-sided Student-t tail probability `P(|T| >= |t|)` with `df` degrees
/// of freedom, via the regularised incomplete beta function.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Welch's unequal-variance t-test with Welch–Satterthwaite degrees of
/// freedom and a two-sided p-value.
pub fn welch_ttest(rogue_values: &[f64], nonrogue_values: &[f64]) -> Result<TTestResult> {
    for (name, xs) in [("rogue", rogue_values), ("non-rogue", nonrogue_values)] {
        if xs.len() < 2 {
            return Err(Error::UndefinedTest(format!("{name} sample has fewer than two values")));
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::UndefinedTest(format!("{name} sample has non-finite values")));
        }
    }
    let (m1, v1) = mean_var(rogue_values);
    let (m2, v2) = mean_var(nonrogue_values);
    let n1 = rogue_values.len() as f64;
    let n2 = nonrogue_values.len() as f64;
    let a = v1 / n1;
    let b = v2 / n2;
    if a + b == 0.0 {
        return Err(Error::UndefinedTest("both samples have zero variance".into()));
    }
    let t = (m1 - m2) / (a + b).sqrt();
    let df = (a + b) * (a + b) / (a * a / (n1 - 1.0) + b * b / (n2 - 1.0));
    Ok(TTestResult {
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: student_t_two_sided(t, df),
    })
}

/// A cross-group ratio of means, undefined when the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Finite(f64),
    Undefined,
}

impl Ratio {
    pub fn value(self) -> Option<f64> {
        match self {
            Ratio::Finite(v) => Some(v),
            Ratio::Undefined => None,
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Finite(v) => write!(f, "{v}"),
            Ratio::Undefined => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RatioDirection {
    /// How many times larger the regular mean is.
    #[default]
    NonRogueOverRogue,
    RogueOverNonRogue,
}

pub fn crossgroup_ratio(summary: &GroupSummary, direction: RatioDirection) -> Ratio {
    let (num, den) = match direction {
        RatioDirection::NonRogueOverRogue => (summary.nonrogue_mean, summary.rogue_mean),
        RatioDirection::RogueOverNonRogue => (summary.rogue_mean, summary.nonrogue_mean),
    };
    if den > 0.0 {
        Ratio::Finite(num / den)
    } else {
        Ratio::Undefined
    }
}

/// Mean of the finite ratios; undefined ones are left out.
pub fn mean_ratio(ratios: &[Ratio]) -> Option<f64> {
    let finite: Vec<f64> = ratios.iter().filter_map(|r| r.value()).collect();
    (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64)
}

pub fn default_account_cutoff() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2014, 1, 1, 0, 0, 0).unwrap()
}

/// Fraction of distinct users whose account was created at or after
/// `cutoff`. Each user counts once, with the creation date of their first
/// record.
pub fn account_age_fraction(records: &[TweetRecord], cutoff: DateTime<Utc>) -> Result<f64> {
    let mut users: BTreeMap<&str, DateTime<Utc>> = BTreeMap::new();
    for r in records {
        users.entry(r.user_id.as_str()).or_insert(r.user_created_at);
    }
    if users.is_empty() {
        return Err(Error::DegenerateGroup("no users to date".into()));
    }
    let recent = users.values().filter(|&&c| c >= cutoff).count();
    Ok(recent as f64 / users.len() as f64)
}

/// One feature row of a drug's statistics table.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub summary: GroupSummary,
    pub ratio: Ratio,
    /// `None` when the test is undefined (for example both classes constant).
    pub ttest: Option<TTestResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrugStats {
    pub drug: String,
    pub rows: Vec<FeatureRow>,
    /// Share of rogue accounts created at or after the cutoff.
    pub rogue_recent_accounts: Option<f64>,
}

/// Means, ratios and Welch tests of every feature for one drug's tweets.
pub fn drug_stats(drug: &str, vectors: &[FeatureVector], rogue_records: &[TweetRecord]) -> Result<DrugStats> {
    let summaries = group_means(vectors, drug)?;
    let rows = summaries
        .into_iter()
        .map(|summary| {
            let column = |class: ClassLabel| -> Vec<f64> {
                vectors
                    .iter()
                    .filter(|v| v.label == Some(class))
                    .map(|v| v.get(summary.feature))
                    .collect()
            };
            let ttest = welch_ttest(&column(ClassLabel::Rogue), &column(ClassLabel::NonRogue)).ok();
            FeatureRow {
                ratio: crossgroup_ratio(&summary, RatioDirection::NonRogueOverRogue),
                ttest,
                summary,
            }
        })
        .collect();
    Ok(DrugStats {
        drug: drug.to_string(),
        rows,
        rogue_recent_accounts: account_age_fraction(rogue_records, default_account_cutoff()).ok(),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_stats_csv(writer: impl std::io::Write, stats: &[DrugStats]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "drug",
        "feature",
        "group",
        "rogue_mean",
        "nonrogue_mean",
        "rogue_n",
        "nonrogue_n",
        "nonrogue_over_rogue",
        "t_statistic",
        "df",
        "p_value",
    ])?;
    for s in stats {
        for row in &s.rows {
            let t = row.ttest;
            w.write_record([
                s.drug.clone(),
                row.summary.feature.to_string(),
                row.summary.feature.group().as_str().to_string(),
                row.summary.rogue_mean.to_string(),
                row.summary.nonrogue_mean.to_string(),
                row.summary.rogue_n.to_string(),
                row.summary.nonrogue_n.to_string(),
                row.ratio.to_string(),
                opt(t.map(|t| t.t_statistic)),
                opt(t.map(|t| t.degrees_of_freedom)),
                opt(t.map(|t| t.p_value)),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Aligned text tables, one per drug, followed by cross-drug ratios.
pub fn stats_report(stats: &[DrugStats]) -> String {
    let mut out = String::new();
    for s in stats {
        let (rn, nn) = s
            .rows
            .first()
            .map_or((0, 0), |r| (r.summary.rogue_n, r.summary.nonrogue_n));
        writeln!(out, "== {}  (rogue n={rn}, non-rogue n={nn})", s.drug.to_uppercase()).unwrap();
        writeln!(
            out,
            "{:<22} {:>12} {:>12} {:>10} {:>10} {:>10} {:>10}",
            "feature", "rogue", "non-rogue", "ratio", "t", "df", "p"
        )
        .unwrap();
        for row in &s.rows {
            let (t, df, p) = match row.ttest {
                Some(t) => (
                    format!("{:.3}", t.t_statistic),
                    format!("{:.1}", t.degrees_of_freedom),
                    format!("{:.3e}", t.p_value),
                ),
                None => ("-".into(), "-".into(), "-".into()),
            };
            let ratio = match row.ratio {
                Ratio::Finite(v) => format!("{v:.2}"),
                Ratio::Undefined => "inf".into(),
            };
            writeln!(
                out,
                "{:<22} {:>12.4} {:>12.4} {:>10} {:>10} {:>10} {:>10}",
                row.summary.feature.as_str(),
                row.summary.rogue_mean,
                row.summary.nonrogue_mean,
                ratio,
                t,
                df,
                p
            )
            .unwrap();
        }
        if let Some(frac) = s.rogue_recent_accounts {
            writeln!(
                out,
                "rogue accounts created on or after 2014-01-01: {:.1}%",
                frac * 100.0
            )
            .unwrap();
        }
        out.push('\n');
    }
    for feature in [FeatureName::UserFriendsCount, FeatureName::UserFollowerCount] {
        let ratios: Vec<Ratio> = stats
            .iter()
            .flat_map(|s| s.rows.iter().filter(|r| r.summary.feature == feature).map(|r| r.ratio))
            .collect();
        if let Some(m) = mean_ratio(&ratios) {
            writeln!(out, "mean non-rogue/rogue ratio of {feature} across drugs: {m:.1}x").unwrap();
        }
    }
    out
}
