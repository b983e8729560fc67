//! Scoring, confusion analysis and a most-frequent-tag baseline.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::corpus::{Corpus, Sentence};
use crate::error::{Error, Result};

/// Counts indexed `[gold][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>) -> Self {
        let n = labels.len();
        ConfusionMatrix {
            labels,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn add(&mut self, gold: usize, predicted: usize) {
        self.counts[gold][predicted] += 1;
    }

    pub fn get(&self, gold: usize, predicted: usize) -> u64 {
        self.counts[gold][predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn gold_count(&self, tag: usize) -> u64 {
        self.counts[tag].iter().sum()
    }

    pub fn predicted_count(&self, tag: usize) -> u64 {
        self.counts.iter().map(|row| row[tag]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TagScore {
    pub tag: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold occurrences.
    pub support: u64,
    pub predicted: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Confusion {
    pub gold: String,
    pub predicted: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub tokens: u64,
    pub correct: u64,
    pub micro_f1: f64,
    /// Mean F1 over tags that occur in gold or predictions.
    pub macro_f1: f64,
    pub per_tag: Vec<TagScore>,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Scores `predicted` against `gold`, token by token.
pub fn score(gold: &Corpus, predicted: &Corpus) -> Result<EvalReport> {
    if gold.sentences.len() != predicted.sentences.len() {
        return Err(Error::Structure(format!(
            "gold has {} sentences, prediction has {}",
            gold.sentences.len(),
            predicted.sentences.len()
        )));
    }
    let mut labels: Vec<String> = gold.tagset.labels.labels().to_vec();
    let mut index: HashMap<String, usize> = labels
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, l)| (l, i))
        .collect();
    let mut pairs = Vec::with_capacity(gold.token_count());
    for (si, (g, p)) in gold.sentences.iter().zip(&predicted.sentences).enumerate() {
        if g.len() != p.len() {
            return Err(Error::Structure(format!(
                "sentence {} has {} gold tokens and {} predicted tokens",
                si + 1,
                g.len(),
                p.len()
            )));
        }
        for (ti, (gt, pt)) in g.tokens.iter().zip(&p.tokens).enumerate() {
            let gtag = gt.tag.as_ref().ok_or(Error::MissingField {
                position: ti,
                field: "gold tag",
            })?;
            let ptag = pt.tag.as_ref().ok_or(Error::MissingField {
                position: ti,
                field: "predicted tag",
            })?;
            let mut id = |tag: &String| {
                *index.entry(tag.clone()).or_insert_with(|| {
                    labels.push(tag.clone());
                    labels.len() - 1
                })
            };
            let gi = id(gtag);
            let pi = id(ptag);
            pairs.push((gi, pi));
        }
    }
    let mut confusion = ConfusionMatrix::new(labels);
    for (g, p) in pairs {
        confusion.add(g, p);
    }
    Ok(report_from(confusion))
}

/// Derives every summary figure from the confusion matrix.
pub fn report_from(confusion: ConfusionMatrix) -> EvalReport {
    let tokens = confusion.total();
    let correct = confusion.correct();
    // 2tp / (2tp + fp + fn); with one tag per token fp = fn = tokens − tp.
    let wrong = tokens - correct;
    let micro_f1 = ratio(2 * correct, 2 * correct + 2 * wrong);
    let mut per_tag = Vec::with_capacity(confusion.labels.len());
    let mut macro_sum = 0.0;
    let mut macro_n = 0usize;
    for (i, tag) in confusion.labels.iter().enumerate() {
        let tp = confusion.get(i, i);
        let support = confusion.gold_count(i);
        let predicted = confusion.predicted_count(i);
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = ratio(2 * tp, support + predicted);
        if support + predicted > 0 {
            macro_sum += f1;
            macro_n += 1;
        }
        per_tag.push(TagScore {
            tag: tag.clone(),
            precision,
            recall,
            f1,
            support,
            predicted,
        });
    }
    EvalReport {
        tokens,
        correct,
        micro_f1,
        macro_f1: if macro_n == 0 {
            0.0
        } else {
            macro_sum / macro_n as f64
        },
        per_tag,
        confusion,
    }
}

/// Off-diagonal cells by descending count; ties by gold then predicted index.
pub fn top_confusions(report: &EvalReport, n: usize) -> Vec<Confusion> {
    let m = &report.confusion;
    let k = m.labels.len();
    let mut cells: Vec<(u64, usize, usize)> = (0..k)
        .flat_map(|g| (0..k).map(move |p| (g, p)))
        .filter(|&(g, p)| g != p && m.get(g, p) > 0)
        .map(|(g, p)| (m.get(g, p), g, p))
        .collect();
    cells.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    cells
        .into_iter()
        .take(n)
        .map(|(count, g, p)| Confusion {
            gold: m.labels[g].clone(),
            predicted: m.labels[p].clone(),
            count,
        })
        .collect()
}

/// Tags every word with its most frequent training tag (ties go to the
/// alphabetically first tag); unseen words get the corpus-wide majority tag.
pub fn mft_baseline(train: &Corpus, input: &Corpus) -> Result<Corpus> {
    let mut per_word: HashMap<&str, BTreeMap<&str, usize>> = HashMap::new();
    let mut global: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, tok) in train.tokens().enumerate() {
        let tag = tok.tag.as_deref().ok_or(Error::MissingField {
            position: i,
            field: "training tag",
        })?;
        *per_word
            .entry(&tok.surface)
            .or_default()
            .entry(tag)
            .or_default() += 1;
        *global.entry(tag).or_default() += 1;
    }
    let majority = |counts: &BTreeMap<&str, usize>| -> Option<String> {
        // BTreeMap iterates alphabetically, so the first maximum wins ties.
        let mut best: Option<(&str, usize)> = None;
        for (&tag, &c) in counts {
            if best.map_or(true, |(_, b)| c > b) {
                best = Some((tag, c));
            }
        }
        best.map(|(t, _)| t.to_string())
    };
    let fallback =
        majority(&global).ok_or_else(|| Error::EmptyCorpus("baseline training corpus".into()))?;
    let lexicon: HashMap<&str, String> = per_word
        .iter()
        .filter_map(|(w, counts)| majority(counts).map(|t| (*w, t)))
        .collect();
    let sentences = input
        .sentences
        .iter()
        .map(|s| {
            let mut out: Sentence = s.clone();
            for tok in &mut out.tokens {
                tok.tag = Some(
                    lexicon
                        .get(tok.surface.as_str())
                        .cloned()
                        .unwrap_or_else(|| fallback.clone()),
                );
            }
            out
        })
        .collect();
    Ok(Corpus {
        sentences,
        tagset: train.tagset.clone(),
        languages: input.languages.clone(),
        provenance: format!("most-frequent-tag baseline over {}", input.provenance),
    })
}

impl EvalReport {
    /// Human-readable report with per-tag scores and the top confusions.
    pub fn to_text(&self, confusions: usize) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "tokens      {}", self.tokens);
        let _ = writeln!(out, "correct     {}", self.correct);
        let _ = writeln!(out, "micro F1    {:.4}", self.micro_f1);
        let _ = writeln!(out, "macro F1    {:.4}", self.macro_f1);
        let _ = writeln!(out);
        let width = self
            .per_tag
            .iter()
            .map(|t| t.tag.len())
            .max()
            .unwrap_or(3)
            .max(3);
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>7}",
            "tag", "precision", "recall", "F1", "support"
        );
        for t in &self.per_tag {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}",
                t.tag, t.precision, t.recall, t.f1, t.support
            );
        }
        let top = top_confusions(self, confusions);
        if !top.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(out, "most frequent confusions (gold -> predicted):");
            for c in top {
                let _ = writeln!(out, "  {} -> {}  {}", c.gold, c.predicted, c.count);
            }
        }
        out
    }

    /// One `key=value` pair per line. Keys: `tokens`, `correct`, `micro_f1`,
    /// `macro_f1`, `tag.<T>.{precision,recall,f1,support,predicted}`,
    /// `confusion.<gold>.<predicted>` for every non-zero cell, and
    /// `top_confusion.<rank>` as `<gold>,<predicted>,<count>`.
    pub fn to_key_value(&self, confusions: usize) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "tokens={}", self.tokens);
        let _ = writeln!(out, "correct={}", self.correct);
        let _ = writeln!(out, "micro_f1={}", self.micro_f1);
        let _ = writeln!(out, "macro_f1={}", self.macro_f1);
        for t in &self.per_tag {
            let _ = writeln!(out, "tag.{}.precision={}", t.tag, t.precision);
            let _ = writeln!(out, "tag.{}.recall={}", t.tag, t.recall);
            let _ = writeln!(out, "tag.{}.f1={}", t.tag, t.f1);
            let _ = writeln!(out, "tag.{}.support={}", t.tag, t.support);
            let _ = writeln!(out, "tag.{}.predicted={}", t.tag, t.predicted);
        }
        let labels = self.confusion.labels();
        for (g, gl) in labels.iter().enumerate() {
            for (p, pl) in labels.iter().enumerate() {
                let c = self.confusion.get(g, p);
                if c > 0 {
                    let _ = writeln!(out, "confusion.{gl}.{pl}={c}");
                }
            }
        }
        for (rank, c) in top_confusions(self, confusions).iter().enumerate() {
            let _ = writeln!(
                out,
                "top_confusion.{}={},{},{}",
                rank + 1,
                c.gold,
                c.predicted,
                c.count
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;

    fn corpus(tags: &[&[&str]]) -> Corpus {
        Corpus::from_sentences(
            tags.iter()
                .map(|s| {
                    Sentence::new(
                        s.iter()
                            .enumerate()
                            .map(|(i, t)| Token::new(format!("w{i}")).with_tag(*t))
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    #[test]
    fn identical_corpora_score_one() {
        let g = corpus(&[&["N", "V", "N"], &["A"]]);
        let r = score(&g, &g).unwrap();
        assert_eq!(r.micro_f1, 1.0);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(
                    r.confusion.get(i, j) > 0,
                    i == j && r.confusion.gold_count(i) > 0
                );
            }
        }
        assert!(top_confusions(&r, 5).is_empty());
    }

    #[test]
    fn three_of_four() {
        let g = corpus(&[&["N", "V"], &["N", "A"]]);
        let p = corpus(&[&["N", "V"], &["V", "A"]]);
        let r = score(&g, &p).unwrap();
        assert_eq!(r.micro_f1, 0.75);
        assert_eq!(r.tokens, 4);
        let top = top_confusions(&r, 3);
        assert_eq!(
            top,
            vec![Confusion {
                gold: "N".into(),
                predicted: "V".into(),
                count: 1
            }]
        );
        let n = r.per_tag.iter().find(|t| t.tag == "N").unwrap();
        assert_eq!((n.precision, n.recall), (1.0, 0.5));
        let v = r.per_tag.iter().find(|t| t.tag == "V").unwrap();
        assert_eq!((v.precision, v.recall), (0.5, 1.0));
    }

    #[test]
    fn unused_tag_scores_zero_and_skips_macro() {
        let mut g = corpus(&[&["N", "V"]]);
        g.tagset = crate::corpus::TagSet::new(Default::default(), ["A", "N", "V"]);
        let r = score(&g, &g).unwrap();
        let a = &r.per_tag[0];
        assert_eq!((a.precision, a.recall, a.f1), (0.0, 0.0, 0.0));
        assert_eq!(r.macro_f1, 1.0);
    }

    #[test]
    fn structure_mismatch() {
        let g = corpus(&[&["N", "V"]]);
        assert!(score(&g, &corpus(&[&["N"]])).is_err());
        assert!(score(&g, &corpus(&[&["N", "V"], &["N"]])).is_err());
    }

    #[test]
    fn confusions_sorted_by_count_then_index() {
        let g = corpus(&[&["A", "A", "B", "B", "B", "C"]]);
        let p = corpus(&[&["B", "C", "A", "A", "C", "A"]]);
        let r = score(&g, &p).unwrap();
        let top: Vec<_> = top_confusions(&r, 10)
            .into_iter()
            .map(|c| (c.gold, c.predicted, c.count))
            .collect();
        let s = |a: &str, b: &str, n| (a.to_string(), b.to_string(), n);
        assert_eq!(
            top,
            vec![
                s("B", "A", 2),
                s("A", "B", 1),
                s("A", "C", 1),
                s("B", "C", 1),
                s("C", "A", 1)
            ]
        );
    }

    #[test]
    fn baseline_uses_word_majority_and_global_fallback() {
        let mk = |pairs: &[(&str, &str)]| {
            Corpus::from_sentences(vec![Sentence::new(
                pairs
                    .iter()
                    .map(|(w, t)| Token::new(*w).with_tag(*t))
                    .collect(),
            )])
        };
        let train = mk(&[
            ("run", "V"),
            ("run", "N"),
            ("dog", "N"),
            ("cat", "N"),
            ("go", "V"),
        ]);
        let input = Corpus::from_sentences(vec![Sentence::from_surfaces("run dog go zebra")]);
        let out = mft_baseline(&train, &input).unwrap();
        let tags: Vec<_> = out.tokens().map(|t| t.tag.clone().unwrap()).collect();
        // "run" ties N/V → N; "zebra" unseen → global majority N.
        assert_eq!(tags, ["N", "N", "V", "N"]);
    }

    #[test]
    fn report_formats() {
        let g = corpus(&[&["N", "V"], &["N", "A"]]);
        let p = corpus(&[&["N", "V"], &["V", "A"]]);
        let r = score(&g, &p).unwrap();
        let kv = r.to_key_value(5);
        assert!(kv.contains("micro_f1=0.75\n"));
        assert!(kv.contains("confusion.N.V=1\n"));
        assert!(kv.contains("top_confusion.1=N,V,1\n"));
        let text = r.to_text(5);
        assert!(text.contains("micro F1    0.7500"));
        assert!(text.contains("N -> V  1"));
    }
}
