//! Keyword explanations of clusters from their term-space centroids.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::corpus::TermVectorSpace;
use crate::error::{Error, Result};
use crate::simcore::Partition;

pub const DEFAULT_TOP_TERMS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterExplanation {
    pub cluster: usize,
    pub size: usize,
    pub empty: bool,
    /// Highest-weight centroid terms, descending, ties broken lexicographically.
    pub top_terms: Vec<(String, f64)>,
    /// `(document id, cosine to centroid)` per member, in document order.
    pub member_similarities: Vec<(String, f64)>,
}

impl ClusterExplanation {
    pub fn term_set(&self) -> BTreeSet<&str> {
        self.top_terms.iter().map(|(t, _)| t.as_str()).collect()
    }
}

fn unit(v: ndarray::ArrayView1<f64>) -> Array1<f64> {
    let norm = v.dot(&v).sqrt();
    if norm > 0.0 {
        v.to_owned() / norm
    } else {
        v.to_owned()
    }
}

pub fn explain_clusters(space: &TermVectorSpace, p: &Partition, w: usize) -> Result<Vec<ClusterExplanation>> {
    if w == 0 {
        return Err(Error::InvalidParameter("number of top terms must be at least 1".into()));
    }
    if p.n() != space.n() {
        return Err(Error::Dimension(format!(
            "partition has {} items, term space has {} documents",
            p.n(),
            space.n()
        )));
    }
    let units: Vec<Array1<f64>> = space.doc_vectors.rows().into_iter().map(unit).collect();
    let mut out = Vec::with_capacity(p.k());
    for cluster in 0..p.k() {
        let members = p.members(cluster);
        if members.is_empty() {
            out.push(ClusterExplanation {
                cluster,
                size: 0,
                empty: true,
                top_terms: Vec::new(),
                member_similarities: Vec::new(),
            });
            continue;
        }
        let mut centroid = Array1::<f64>::zeros(space.vocabulary.len());
        for &i in &members {
            centroid += &units[i];
        }
        centroid /= members.len() as f64;

        let mut ranked: Vec<usize> = (0..centroid.len()).filter(|&t| centroid[t] > 0.0).collect();
        ranked.sort_by(|&a, &b| {
            centroid[b]
                .total_cmp(&centroid[a])
                .then_with(|| space.vocabulary[a].cmp(&space.vocabulary[b]))
        });
        ranked.truncate(w);

        let cnorm = centroid.dot(&centroid).sqrt();
        let member_similarities = members
            .iter()
            .map(|&i| {
                let cos = if cnorm > 0.0 { units[i].dot(&centroid) / cnorm } else { 0.0 };
                (space.doc_ids[i].clone(), cos)
            })
            .collect();
        out.push(ClusterExplanation {
            cluster,
            size: members.len(),
            empty: false,
            top_terms: ranked
                .into_iter()
                .map(|t| (space.vocabulary[t].clone(), centroid[t]))
                .collect(),
            member_similarities,
        });
    }
    Ok(out)
}

pub fn jaccard<'a>(a: &BTreeSet<&'a str>, b: &BTreeSet<&'a str>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEntry {
    pub before_cluster: usize,
    pub after_cluster: usize,
    pub jaccard: f64,
}

/// Top-term overlap of matched clusters. `pairs` lists `(before, after)`
/// cluster ids; when `None`, clusters are paired by id.
pub fn explanation_drift(
    before: &[ClusterExplanation],
    after: &[ClusterExplanation],
    pairs: Option<&[(usize, usize)]>,
) -> Vec<DriftEntry> {
    let by_id: Vec<(usize, usize)> = match pairs {
        Some(p) => p.to_vec(),
        None => (0..before.len().min(after.len())).map(|i| (i, i)).collect(),
    };
    by_id
        .into_iter()
        .filter_map(|(b, a)| {
            let x = before.iter().find(|e| e.cluster == b)?;
            let y = after.iter().find(|e| e.cluster == a)?;
            Some(DriftEntry {
                before_cluster: b,
                after_cluster: a,
                jaccard: jaccard(&x.term_set(), &y.term_set()),
            })
        })
        .collect()
}

pub fn to_markdown(explanations: &[ClusterExplanation]) -> String {
    let mut out = String::from("# Cluster explanations\n");
    for e in explanations {
        let _ = writeln!(out, "\n## Cluster {} ({} documents)\n", e.cluster, e.size);
        if e.empty {
            out.push_str("Empty cluster.\n");
            continue;
        }
        out.push_str("| rank | term | weight |\n|---:|---|---:|\n");
        for (r, (t, w)) in e.top_terms.iter().enumerate() {
            let _ = writeln!(out, "| {} | {} | {:.4} |", r + 1, t, w);
        }
        let mean = e.member_similarities.iter().map(|(_, c)| c).sum::<f64>() / e.size as f64;
        let _ = writeln!(out, "\nMean member cosine to centroid: {mean:.4}");
    }
    out
}

pub fn to_json(explanations: &[ClusterExplanation]) -> Result<String> {
    Ok(serde_json::to_string_pretty(explanations)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_term_space, Corpus, Document, Weighting};
    use crate::synthgen::{planted_corpus, PlantedCorpusParams};

    fn space(texts: &[&str]) -> TermVectorSpace {
        let docs = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Document {
                id: format!("d{i}"),
                text: t.to_string(),
                label: None,
            })
            .collect();
        build_term_space(&Corpus::new(docs).unwrap(), Weighting::Tf).unwrap()
    }

    #[test]
    fn single_doc_cluster_uses_its_own_terms() {
        let sp = space(&["apple apple pear", "apple pear plum", "plum kiwi", "kiwi kiwi"]);
        let p = Partition::new(vec![0, 1, 1, 1], 2).unwrap();
        let e = explain_clusters(&sp, &p, 2).unwrap();
        assert_eq!(e[0].top_terms[0].0, "apple");
        assert_eq!(e[0].top_terms[1].0, "pear");
        assert!((e[0].member_similarities[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shared_term_ranks_first() {
        let sp = space(&["radio alpha beta", "radio gamma delta", "alpha gamma", "beta delta"]);
        let p = Partition::new(vec![0, 0, 1, 1], 2).unwrap();
        let e = explain_clusters(&sp, &p, 3).unwrap();
        assert_eq!(e[0].top_terms[0].0, "radio");
        // Ties after the leader are lexicographic.
        assert_eq!(e[0].top_terms[1].0, "alpha");
        assert_eq!(e[0].top_terms[2].0, "beta");
        for w in e[0].top_terms.windows(2) {
            assert!(w[0].1 >= w[1].1);
        }
    }

    #[test]
    fn empty_cluster_is_flagged() {
        let sp = space(&["a b", "a b"]);
        let e = explain_clusters(&sp, &Partition::new(vec![0, 0], 2).unwrap(), 5).unwrap();
        assert!(e[1].empty && e[1].top_terms.is_empty());
        assert!(explain_clusters(&sp, &Partition::new(vec![0, 0], 2).unwrap(), 0).is_err());
        assert!(to_markdown(&e).contains("Empty cluster."));
    }

    #[test]
    fn planted_vocabulary_is_recovered() {
        let pc = planted_corpus(&PlantedCorpusParams {
            noise_docs: 0,
            ..Default::default()
        })
        .unwrap();
        let sp = build_term_space(&pc.corpus, Weighting::Tf).unwrap();
        let labels: Vec<usize> = sp.kept.iter().map(|&i| pc.labels[i]).collect();
        let p = Partition::new(labels, 4).unwrap();
        for e in explain_clusters(&sp, &p, 10).unwrap() {
            for (t, _) in e.top_terms.iter().take(3) {
                assert!(pc.topic_terms[e.cluster].contains(t), "{t} not planted in {}", e.cluster);
            }
            assert!(e.member_similarities.iter().all(|(_, c)| *c >= 0.0));
        }
    }

    #[test]
    fn drift_extremes() {
        let sp = space(&["a b c", "a b c", "x y z", "x y z"]);
        let p = Partition::new(vec![0, 0, 1, 1], 2).unwrap();
        let e = explain_clusters(&sp, &p, 3).unwrap();
        assert!(explanation_drift(&e, &e, None).iter().all(|d| d.jaccard == 1.0));
        let swapped = explanation_drift(&e, &e, Some(&[(0, 1), (1, 0)]));
        assert!(swapped.iter().all(|d| d.jaccard == 0.0));
    }

    #[test]
    fn reports_render() {
        let sp = space(&["a b", "a b", "c d", "c d"]);
        let e = explain_clusters(&sp, &Partition::new(vec![0, 0, 1, 1], 2).unwrap(), 10).unwrap();
        let md = to_markdown(&e);
        assert!(md.contains("## Cluster 1 (2 documents)"));
        let v: serde_json::Value = serde_json::from_str(&to_json(&e).unwrap()).unwrap();
        assert_eq!(v[0]["top_terms"][0][0], "a");
    }
}
