//! Associational baselines: pairwise correlation screening and one-sample
//! t-tests of each response against the scale's neutral point.

use statrs::function::beta::beta_reg;
use thiserror::Error;

use crate::graph::NodeId;
use crate::ingest::{Dataset, VariableKind};
use crate::par::{self, Parallelism};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("dataset has missing values")]
    MissingValues,
    #[error("variable {0} is out of range")]
    OutOfRange(NodeId),
    #[error("variable {0:?} is not Likert-7")]
    NotLikert(String),
    #[error("variable {0:?} is categorical; correlation needs ordered values")]
    Categorical(String),
    #[error("neutral test needs at least 3 responses, got {0}")]
    TooFewResponses(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    Pearson,
    Spearman,
}

impl CorrelationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CorrelationMethod::Pearson => "pearson",
            CorrelationMethod::Spearman => "spearman",
        }
    }
}

impl std::str::FromStr for CorrelationMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pearson" => Ok(CorrelationMethod::Pearson),
            "spearman" => Ok(CorrelationMethod::Spearman),
            other => Err(format!("unknown correlation method {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct StrongPair {
    pub i: NodeId,
    pub j: NodeId,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CorrelationScreen {
    pub method: CorrelationMethod,
    pub threshold: f64,
    pub p: usize,
    /// Row-major `p x p` coefficients.
    pub matrix: Vec<f64>,
    /// Pairs `i < j` with `|r| > threshold`, by descending `|r|` then index.
    pub strong_pairs: Vec<StrongPair>,
    /// Zero-variance columns; their coefficients are recorded as 0.
    pub zero_variance: Vec<NodeId>,
}

impl CorrelationScreen {
    pub fn r(&self, i: NodeId, j: NodeId) -> f64 {
        self.matrix[i * self.p + j]
    }
}

/// Average ranks (1-based) with tied values sharing their mid-rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

/// Centers a column and scales it to unit norm; `None` if it is constant.
fn unit_centered(col: &[f64]) -> Option<Vec<f64>> {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let centered: Vec<f64> = col.iter().map(|v| v - mean).collect();
    let norm = centered.iter().map(|v| v * v).sum::<f64>().sqrt();
    (norm > 0.0).then(|| centered.into_iter().map(|v| v / norm).collect())
}

pub fn correlation_screen(
    data: &Dataset,
    method: CorrelationMethod,
    threshold: f64,
    parallelism: Parallelism,
) -> Result<CorrelationScreen, BaselineError> {
    if data.has_missing() {
        return Err(BaselineError::MissingValues);
    }
    if let Some(s) = data.specs().iter().find(|s| s.kind == VariableKind::Categorical) {
        return Err(BaselineError::Categorical(s.name.clone()));
    }
    let p = data.p();
    let columns: Vec<Option<Vec<f64>>> = par::map_range(parallelism, p, |j| {
        let col = data.column(j);
        match method {
            CorrelationMethod::Pearson => unit_centered(col),
            CorrelationMethod::Spearman => unit_centered(&midranks(col)),
        }
    });
    let zero_variance: Vec<NodeId> = (0..p).filter(|&j| columns[j].is_none()).collect();

    let rows: Vec<Vec<f64>> = par::map_range(parallelism, p, |i| {
        (0..p)
            .map(|j| {
                if i == j {
                    return 1.0;
                }
                match (&columns[i], &columns[j]) {
                    (Some(a), Some(b)) => a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().clamp(-1.0, 1.0),
                    _ => 0.0,
                }
            })
            .collect()
    });
    // symmetrize from the upper triangle so r(i, j) and r(j, i) are identical bits
    let mut matrix = vec![0.0; p * p];
    for i in 0..p {
        for j in i..p {
            matrix[i * p + j] = rows[i][j];
            matrix[j * p + i] = rows[i][j];
        }
    }
    let mut strong_pairs: Vec<StrongPair> = (0..p)
        .flat_map(|i| (i + 1..p).map(move |j| (i, j)))
        .filter_map(|(i, j)| {
            let r = matrix[i * p + j];
            (r.abs() > threshold).then_some(StrongPair { i, j, r })
        })
        .collect();
    strong_pairs.sort_by(|a, b| b.r.abs().total_cmp(&a.r.abs()).then((a.i, a.j).cmp(&(b.i, b.j))));

    Ok(CorrelationScreen {
        method,
        threshold,
        p,
        matrix,
        strong_pairs,
        zero_variance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Stars {
    None,
    One,
    Two,
    Three,
}

impl Stars {
    pub fn from_p(p: f64) -> Stars {
        if p < 0.001 {
            Stars::Three
        } else if p < 0.01 {
            Stars::Two
        } else if p < 0.05 {
            Stars::One
        } else {
            Stars::None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stars::None => "",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct NeutralTest {
    pub variable: NodeId,
    /// Mean response minus the neutral point.
    pub effect_size: f64,
    pub t_statistic: f64,
    pub p_value: f64,
    pub stars: Stars,
    /// Zero-variance column.
    pub degenerate: bool,
}

/// Two-sided p-value of a t statistic with `df` degrees of freedom:
/// `I_{df / (df + t^2)}(df / 2, 1 / 2)`.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    beta_reg(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

/// One-sample two-sided t-test of the column mean against `neutral`.
pub fn neutral_test(data: &Dataset, variable: NodeId, neutral: f64) -> Result<NeutralTest, BaselineError> {
    if variable >= data.p() {
        return Err(BaselineError::OutOfRange(variable));
    }
    let spec = &data.specs()[variable];
    if spec.kind != VariableKind::Likert7 {
        return Err(BaselineError::NotLikert(spec.name.clone()));
    }
    if data.has_missing() {
        return Err(BaselineError::MissingValues);
    }
    let col = data.column(variable);
    let n = col.len();
    if n < 3 {
        return Err(BaselineError::TooFewResponses(n));
    }
    let nf = n as f64;
    let mean = col.iter().sum::<f64>() / nf;
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let effect_size = mean - neutral;
    let (t_statistic, p_value, degenerate) = if var > 0.0 {
        let t = effect_size / (var / nf).sqrt();
        (t, t_two_sided_p(t, nf - 1.0), false)
    } else if effect_size == 0.0 {
        (0.0, 1.0, true)
    } else {
        (effect_size.signum() * f64::INFINITY, 0.0, true)
    };
    Ok(NeutralTest {
        variable,
        effect_size,
        t_statistic,
        p_value,
        stars: Stars::from_p(p_value),
        degenerate,
    })
}

/// Neutral tests for every Likert-7 variable. With `bonferroni`, p-values
/// are multiplied by the number of tests (capped at 1) before starring.
pub fn neutral_tests(
    data: &Dataset,
    neutral: f64,
    bonferroni: bool,
    parallelism: Parallelism,
) -> Result<Vec<NeutralTest>, BaselineError> {
    let vars: Vec<NodeId> = (0..data.p())
        .filter(|&j| data.specs()[j].kind == VariableKind::Likert7)
        .collect();
    let mut tests = par::map(parallelism, &vars, |&j| neutral_test(data, j, neutral))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    if bonferroni {
        let m = tests.len() as f64;
        for t in &mut tests {
            t.p_value = (t.p_value * m).min(1.0);
            t.stars = Stars::from_p(t.p_value);
        }
    }
    Ok(tests)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::VariableSpec;

    fn likert(columns: Vec<Vec<f64>>) -> Dataset {
        let specs = (0..columns.len())
            .map(|j| VariableSpec::new(format!("q{j}"), VariableKind::Likert7, ""))
            .collect();
        Dataset::from_columns(specs, columns)
    }

    #[test]
    fn midranks_share_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn self_correlation_and_threshold() {
        let a = vec![1.0, 2.0, 4.0, 3.0, 5.0];
        let d = likert(vec![a.clone(), a, vec![5.0, 4.0, 2.0, 3.0, 1.0]]);
        for method in [CorrelationMethod::Pearson, CorrelationMethod::Spearman] {
            let s = correlation_screen(&d, method, 0.5, Parallelism::Sequential).unwrap();
            assert_eq!(s.r(0, 0), 1.0);
            assert!((s.r(0, 1) - 1.0).abs() < 1e-12);
            assert!((s.r(0, 2) + 1.0).abs() < 1e-12);
            assert_eq!(s.strong_pairs.len(), 3);
            let none = correlation_screen(&d, method, 1.01, Parallelism::Sequential).unwrap();
            assert!(none.strong_pairs.is_empty());
        }
    }

    #[test]
    fn zero_variance_recorded_as_zero() {
        let d = likert(vec![vec![1.0, 2.0, 3.0], vec![4.0; 3]]);
        let s = correlation_screen(&d, CorrelationMethod::Pearson, 0.5, Parallelism::Sequential).unwrap();
        assert_eq!(s.zero_variance, vec![1]);
        assert_eq!(s.r(0, 1), 0.0);
    }

    #[test]
    fn stars_cuts() {
        assert_eq!(Stars::from_p(0.2), Stars::None);
        assert_eq!(Stars::from_p(0.04), Stars::One);
        assert_eq!(Stars::from_p(0.005), Stars::Two);
        assert_eq!(Stars::from_p(0.0005), Stars::Three);
        assert_eq!(Stars::from_p(0.05), Stars::None);
    }

    #[test]
    fn neutral_null_and_degenerate() {
        let d = likert(vec![vec![4.0; 10], vec![6.0; 10]]);
        let t = neutral_test(&d, 0, 4.0).unwrap();
        assert_eq!((t.effect_size, t.p_value, t.stars), (0.0, 1.0, Stars::None));
        let t = neutral_test(&d, 1, 4.0).unwrap();
        assert_eq!(t.p_value, 0.0);
        assert!(t.degenerate);
        assert_eq!(t.effect_size, 2.0);
    }

    #[test]
    fn neutral_closed_form() {
        // mean 5, sample sd 1 => t = sqrt(n)
        let col: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 4.0 } else { 6.0 }).collect();
        let d = likert(vec![col]);
        let t = neutral_test(&d, 0, 4.0).unwrap();
        let sd = (100.0f64 / 99.0).sqrt();
        assert!((t.effect_size - 1.0).abs() < 1e-12);
        assert!((t.t_statistic - 10.0 / sd).abs() < 1e-12);
        assert!(t.p_value < 0.001);
        assert_eq!(t.stars, Stars::Three);
    }

    #[test]
    fn bonferroni_scales() {
        let a: Vec<f64> = vec![4.0, 5.0, 4.0, 5.0, 4.0, 5.0, 5.0, 4.0];
        let d = likert(vec![a.clone(), a]);
        let plain = neutral_tests(&d, 4.0, false, Parallelism::Sequential).unwrap();
        let corrected = neutral_tests(&d, 4.0, true, Parallelism::Sequential).unwrap();
        assert!((corrected[0].p_value - (2.0 * plain[0].p_value).min(1.0)).abs() < 1e-15);
    }

    #[test]
    fn wrong_kinds_rejected() {
        let specs = vec![
            VariableSpec::new("c", VariableKind::Categorical, ""),
            VariableSpec::new("x", VariableKind::Numeric, ""),
        ];
        let d = Dataset::from_columns(specs, vec![vec![0.0, 1.0, 0.0], vec![1.0, 2.0, 3.0]]);
        assert!(matches!(
            correlation_screen(&d, CorrelationMethod::Pearson, 0.5, Parallelism::Sequential),
            Err(BaselineError::Categorical(_))
        ));
        assert!(matches!(neutral_test(&d, 1, 4.0), Err(BaselineError::NotLikert(_))));
    }
}
