//! External clustering-quality metrics: purity, NMI, homogeneity, and
//! completeness, per snapshot and averaged over a snapshot sequence.
//!
//! Entropies use the natural log; the base cancels in every reported ratio.

use std::io::Write;

use crate::error::{Error, Result};
use crate::graph::Partition;

/// Joint counts between a predicted and a true partition.
pub struct ContingencyTable {
    /// counts[k][j] = |pred community k ∩ true community j|
    pub counts: Vec<Vec<usize>>,
    pub pred_sizes: Vec<usize>,
    pub true_sizes: Vec<usize>,
    pub total: usize,
}

impl ContingencyTable {
    pub fn build(pred: &Partition, truth: &Partition) -> Result<Self> {
        if pred.labels.len() != truth.labels.len() {
            return Err(Error::NodeSetMismatch(format!(
                "predicted partition covers {} nodes, truth covers {}",
                pred.labels.len(),
                truth.labels.len()
            )));
        }
        let p = pred.compacted();
        let t = truth.compacted();
        let (kp, kt) = (p.community_count(), t.community_count());
        let mut counts = vec![vec![0usize; kt]; kp];
        for (&a, &b) in p.labels.iter().zip(t.labels.iter()) {
            counts[a][b] += 1;
        }
        let pred_sizes = counts.iter().map(|row| row.iter().sum()).collect();
        let mut true_sizes = vec![0usize; kt];
        for row in &counts {
            for (j, &c) in row.iter().enumerate() {
                true_sizes[j] += c;
            }
        }
        Ok(Self { counts, pred_sizes, true_sizes, total: p.labels.len() })
    }
}

fn entropy(sizes: &[usize], total: usize) -> f64 {
    let n = total as f64;
    sizes
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Fraction of nodes that fall in the majority true class of their cluster.
pub fn purity(pred: &Partition, truth: &Partition) -> Result<f64> {
    let table = ContingencyTable::build(pred, truth)?;
    let correct: usize = table
        .counts
        .iter()
        .map(|row| row.iter().copied().max().unwrap_or(0))
        .sum();
    Ok(correct as f64 / table.total as f64)
}

/// Normalized mutual information, 2*I(C,T) / (H(C) + H(T)).
///
/// When both partitions are trivial single clusters (both entropies zero) the
/// partitions agree perfectly and 1 is returned by convention.
pub fn nmi(pred: &Partition, truth: &Partition) -> Result<f64> {
    let table = ContingencyTable::build(pred, truth)?;
    let h_pred = entropy(&table.pred_sizes, table.total);
    let h_true = entropy(&table.true_sizes, table.total);
    if h_pred + h_true == 0.0 {
        return Ok(1.0);
    }
    let n = table.total as f64;
    let mut mi = 0.0;
    for (k, row) in table.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let joint = c as f64 / n;
            let pk = table.pred_sizes[k] as f64 / n;
            let tj = table.true_sizes[j] as f64 / n;
            mi += joint * (joint / (pk * tj)).ln();
        }
    }
    // float noise can push an independent table's MI a hair negative
    Ok((2.0 * mi.max(0.0) / (h_pred + h_true)).clamp(0.0, 1.0))
}

/// 1 - H(T|C)/H(T): do clusters contain members of a single class?
/// Returns 1 when H(T) = 0 (the V-measure convention).
pub fn homogeneity(pred: &Partition, truth: &Partition) -> Result<f64> {
    let table = ContingencyTable::build(pred, truth)?;
    let h_true = entropy(&table.true_sizes, table.total);
    if h_true == 0.0 {
        return Ok(1.0);
    }
    let n = table.total as f64;
    let mut h_cond = 0.0; // H(T|C)
    for (k, row) in table.counts.iter().enumerate() {
        let ck = table.pred_sizes[k];
        if ck == 0 {
            continue;
        }
        h_cond += (ck as f64 / n) * entropy(row, ck);
    }
    Ok((1.0 - h_cond / h_true).clamp(0.0, 1.0))
}

/// 1 - H(C|T)/H(C): are members of a class assigned to one cluster?
/// Exactly `homogeneity(truth, pred)`.
pub fn completeness(pred: &Partition, truth: &Partition) -> Result<f64> {
    homogeneity(truth, pred)
}

/// All four metrics for one snapshot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricRow {
    pub t: usize,
    pub purity: f64,
    pub nmi: f64,
    pub homogeneity: f64,
    pub completeness: f64,
}

pub fn evaluate(pred: &Partition, truth: &Partition) -> Result<MetricRow> {
    Ok(MetricRow {
        t: pred.t,
        purity: purity(pred, truth)?,
        nmi: nmi(pred, truth)?,
        homogeneity: homogeneity(pred, truth)?,
        completeness: completeness(pred, truth)?,
    })
}

/// Per-snapshot metrics plus their arithmetic means over the sequence.
#[derive(Clone, Debug)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
    pub mean_purity: f64,
    pub mean_nmi: f64,
    pub mean_homogeneity: f64,
    pub mean_completeness: f64,
}

pub fn evaluate_sequence(preds: &[Partition], truths: &[Partition]) -> Result<MetricReport> {
    if preds.len() != truths.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predicted partitions vs {} ground-truth partitions",
            preds.len(),
            truths.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::LengthMismatch("no snapshots to evaluate".into()));
    }
    let rows: Vec<MetricRow> = preds
        .iter()
        .zip(truths.iter())
        .map(|(p, t)| evaluate(p, t))
        .collect::<Result<_>>()?;
    let n = rows.len() as f64;
    Ok(MetricReport {
        mean_purity: rows.iter().map(|r| r.purity).sum::<f64>() / n,
        mean_nmi: rows.iter().map(|r| r.nmi).sum::<f64>() / n,
        mean_homogeneity: rows.iter().map(|r| r.homogeneity).sum::<f64>() / n,
        mean_completeness: rows.iter().map(|r| r.completeness).sum::<f64>() / n,
        rows,
    })
}

/// CSV report: one row per snapshot, final row holds the sequence means.
pub fn write_metrics_csv(w: &mut impl Write, report: &MetricReport) -> Result<()> {
    writeln!(w, "t,purity,nmi,homogeneity,completeness")?;
    for r in &report.rows {
        writeln!(w, "{},{},{},{},{}", r.t, r.purity, r.nmi, r.homogeneity, r.completeness)?;
    }
    writeln!(
        w,
        "mean,{},{},{},{}",
        report.mean_purity, report.mean_nmi, report.mean_homogeneity, report.mean_completeness
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(labels: &[usize]) -> Partition {
        Partition::new(1, labels.to_vec())
    }

    #[test]
    fn identical_partitions_score_one_everywhere() {
        let p = part(&[0, 0, 1, 1, 2]);
        let r = evaluate(&p, &p).unwrap();
        assert_eq!(r.purity, 1.0);
        assert!((r.nmi - 1.0).abs() < 1e-12, "nmi {}", r.nmi);
        assert_eq!(r.homogeneity, 1.0);
        assert_eq!(r.completeness, 1.0);
    }

    #[test]
    fn purity_single_cluster_majority() {
        // one predicted cluster; largest true class has 6 of 10 nodes
        let pred = part(&[0; 10]);
        let truth = part(&[0, 0, 0, 0, 0, 0, 1, 1, 2, 2]);
        assert_eq!(purity(&pred, &truth).unwrap(), 0.6);
    }

    #[test]
    fn purity_singletons_always_one() {
        let pred = part(&[0, 1, 2, 3, 4]);
        let truth = part(&[0, 0, 1, 1, 1]);
        assert_eq!(purity(&pred, &truth).unwrap(), 1.0);
    }

    #[test]
    fn nmi_single_cluster_vs_nontrivial_is_zero() {
        let pred = part(&[0, 0, 0, 0]);
        let truth = part(&[0, 0, 1, 1]);
        assert_eq!(nmi(&pred, &truth).unwrap(), 0.0);
    }

    #[test]
    fn nmi_independent_split_is_zero() {
        // {01|23} vs {02|13}: every joint cell has count 1, MI = 0
        let a = part(&[0, 0, 1, 1]);
        let b = part(&[0, 1, 0, 1]);
        assert_eq!(nmi(&a, &b).unwrap(), 0.0);
        assert_eq!(nmi(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn nmi_both_trivial_is_one() {
        let p = part(&[3, 3, 3]);
        assert_eq!(nmi(&p, &p).unwrap(), 1.0);
    }

    #[test]
    fn homogeneity_of_singletons_is_one_completeness_less() {
        let pred = part(&[0, 1, 2, 3]);
        let truth = part(&[0, 0, 1, 1]);
        assert_eq!(homogeneity(&pred, &truth).unwrap(), 1.0);
        assert!(completeness(&pred, &truth).unwrap() < 1.0);
    }

    #[test]
    fn six_node_conditional_entropy_example() {
        // pred {0,1,2 | 3,4,5}, truth {0,1 | 2,3,4,5}
        // H(T|C) = 1/2 * H(2/3,1/3) = 1/2 * H(T)  =>  homogeneity = 1/2
        // H(C|T) = 2/3 * H(1/4,3/4), H(C) = ln 2
        let pred = part(&[0, 0, 0, 1, 1, 1]);
        let truth = part(&[0, 0, 1, 1, 1, 1]);
        let h = homogeneity(&pred, &truth).unwrap();
        assert!((h - 0.5).abs() < 1e-12, "homogeneity {h}");
        let c = completeness(&pred, &truth).unwrap();
        let expect = 1.0 - (2.0 / 3.0) * (0.25f64.ln() * -0.25 - 0.75 * 0.75f64.ln()) / 2.0f64.ln();
        assert!((c - expect).abs() < 1e-12, "completeness {c} vs {expect}");
    }

    #[test]
    fn completeness_is_homogeneity_with_arguments_swapped() {
        let a = part(&[0, 0, 1, 1, 2, 2, 0]);
        let b = part(&[0, 1, 1, 1, 2, 0, 0]);
        assert_eq!(completeness(&a, &b).unwrap(), homogeneity(&b, &a).unwrap());
    }

    #[test]
    fn metrics_invariant_under_relabeling() {
        let a = part(&[0, 0, 1, 1, 2, 2]);
        let b = part(&[0, 1, 1, 2, 2, 2]);
        // swap ids 0<->2 on both sides
        let a2 = part(&[2, 2, 1, 1, 0, 0]);
        let b2 = part(&[2, 1, 1, 0, 0, 0]);
        assert_eq!(purity(&a, &b).unwrap(), purity(&a2, &b2).unwrap());
        assert_eq!(nmi(&a, &b).unwrap(), nmi(&a2, &b2).unwrap());
        assert_eq!(homogeneity(&a, &b).unwrap(), homogeneity(&a2, &b2).unwrap());
        assert_eq!(completeness(&a, &b).unwrap(), completeness(&a2, &b2).unwrap());
    }

    #[test]
    fn nmi_is_symmetric() {
        let a = part(&[0, 0, 1, 1, 2, 2, 1]);
        let b = part(&[0, 1, 1, 2, 2, 2, 0]);
        assert!((nmi(&a, &b).unwrap() - nmi(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn node_set_mismatch_rejected() {
        let a = part(&[0, 0, 1]);
        let b = part(&[0, 0, 1, 1]);
        assert!(purity(&a, &b).is_err());
    }

    #[test]
    fn sequence_means_are_plain_averages() {
        let preds = vec![
            Partition::new(1, vec![0, 0, 1, 1]),
            Partition::new(2, vec![0, 0, 0, 0]),
            Partition::new(3, vec![0, 1, 2, 3]),
        ];
        let truths = vec![
            Partition::new(1, vec![0, 0, 1, 1]),
            Partition::new(2, vec![0, 0, 1, 1]),
            Partition::new(3, vec![0, 0, 1, 1]),
        ];
        let rep = evaluate_sequence(&preds, &truths).unwrap();
        let hand: f64 = rep.rows.iter().map(|r| r.nmi).sum::<f64>() / 3.0;
        assert_eq!(rep.mean_nmi, hand);
        assert_eq!(rep.rows.len(), 3);

        // single snapshot: means equal the row
        let rep1 = evaluate_sequence(&preds[..1], &truths[..1]).unwrap();
        assert_eq!(rep1.mean_purity, rep1.rows[0].purity);
        assert_eq!(rep1.mean_nmi, rep1.rows[0].nmi);

        assert!(evaluate_sequence(&preds, &truths[..2]).is_err());
    }

    #[test]
    fn csv_report_shape() {
        let p = part(&[0, 0, 1, 1]);
        let rep = evaluate_sequence(std::slice::from_ref(&p), std::slice::from_ref(&p)).unwrap();
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &rep).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,purity,nmi,homogeneity,completeness");
        assert_eq!(lines[1], "1,1,1,1,1");
        assert!(lines[2].starts_with("mean,"));
    }
}
