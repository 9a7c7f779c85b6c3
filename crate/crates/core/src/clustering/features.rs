//! Personal feature vectors: the 43-dimensional binary survey encoding and
//! the feature CSV format.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::{Error, Result, SubjectId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Gender,
    Fashion,
    Color,
    Sport,
    Other,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Gender,
        Category::Fashion,
        Category::Color,
        Category::Sport,
        Category::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Gender => "Gender",
            Category::Fashion => "Fashion",
            Category::Color => "Color",
            Category::Sport => "Sport",
            Category::Other => "Other",
        }
    }

    /// Parses a comma-separated list such as `fashion,color`. `all` selects
    /// every category and `none` (or an empty string) selects nothing.
    pub fn parse_list(s: &str) -> Result<Vec<Category>> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("all") {
            return Ok(Category::ALL.to_vec());
        }
        if s.is_empty() || s.eq_ignore_ascii_case("none") {
            return Ok(vec![]);
        }
        let mut out: Vec<Category> = s.split(',').map(str::parse).collect::<Result<_>>()?;
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gender" => Ok(Category::Gender),
            "fashion" => Ok(Category::Fashion),
            "color" | "colors" | "colour" => Ok(Category::Color),
            "sport" | "sports" => Ok(Category::Sport),
            "other" => Ok(Category::Other),
            _ => Err(Error::Config(format!("unknown feature category {s:?}"))),
        }
    }
}

const FEATURES: [(Category, &str); 43] = [
    (Category::Gender, "sex"),
    (Category::Fashion, "fashion"),
    (Category::Fashion, "ring"),
    (Category::Fashion, "necklace"),
    (Category::Fashion, "bracelet"),
    (Category::Fashion, "earring"),
    (Category::Fashion, "hairpin"),
    (Category::Fashion, "watch"),
    (Category::Fashion, "glasses"),
    (Category::Fashion, "tie"),
    (Category::Fashion, "belt"),
    (Category::Fashion, "kneelet"),
    (Category::Color, "red_like"),
    (Category::Color, "yellow_like"),
    (Category::Color, "green_like"),
    (Category::Color, "cyan_like"),
    (Category::Color, "blue_like"),
    (Category::Color, "purple_like"),
    (Category::Color, "white_like"),
    (Category::Color, "black_like"),
    (Category::Color, "red_dislike"),
    (Category::Color, "yellow_dislike"),
    (Category::Color, "green_dislike"),
    (Category::Color, "cyan_dislike"),
    (Category::Color, "blue_dislike"),
    (Category::Color, "purple_dislike"),
    (Category::Color, "white_dislike"),
    (Category::Color, "black_dislike"),
    (Category::Sport, "auto"),
    (Category::Sport, "sport"),
    (Category::Sport, "football"),
    (Category::Sport, "basketball"),
    (Category::Sport, "badminton"),
    (Category::Sport, "tabletennis"),
    (Category::Sport, "tennis"),
    (Category::Sport, "volleyball"),
    (Category::Sport, "baseball"),
    (Category::Sport, "billiards"),
    (Category::Sport, "chess"),
    (Category::Other, "it"),
    (Category::Other, "plant"),
    (Category::Other, "reading"),
    (Category::Other, "eat"),
];

/// Ordered feature labels. The full schema has 43 entries in survey order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    features: Vec<(Category, &'static str)>,
}

impl FeatureSchema {
    pub fn full() -> Arc<FeatureSchema> {
        static FULL: OnceLock<Arc<FeatureSchema>> = OnceLock::new();
        FULL.get_or_init(|| {
            Arc::new(FeatureSchema {
                features: FEATURES.to_vec(),
            })
        })
        .clone()
    }

    /// The full schema restricted to `categories`, order preserved.
    pub fn restricted(categories: &[Category]) -> FeatureSchema {
        FeatureSchema {
            features: FEATURES
                .iter()
                .copied()
                .filter(|(c, _)| categories.contains(c))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.features.iter().map(|(_, n)| *n)
    }

    pub fn categories(&self) -> Vec<Category> {
        let mut c: Vec<_> = self.features.iter().map(|(c, _)| *c).collect();
        c.dedup();
        c
    }

    /// Number of features in `category`.
    pub fn dimension(&self, category: Category) -> usize {
        self.features.iter().filter(|(c, _)| *c == category).count()
    }

    fn positions(&self, categories: &[Category]) -> Vec<usize> {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, (c, _))| categories.contains(c))
            .map(|(i, _)| i)
            .collect()
    }
}

/// One subject's binary survey answers.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    subject: SubjectId,
    entries: Vec<u8>,
    schema: Arc<FeatureSchema>,
}

impl FeatureVector {
    pub fn new(subject: SubjectId, entries: Vec<u8>, schema: Arc<FeatureSchema>) -> Result<Self> {
        if entries.len() != schema.len() {
            return Err(Error::InvalidFeatures(format!(
                "subject {subject}: {} entries for a schema of {}",
                entries.len(),
                schema.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|&e| e > 1) {
            return Err(Error::NonBinaryFeature {
                subject: subject.to_string(),
                feature: schema.features[pos].1.to_string(),
                value: entries[pos].to_string(),
            });
        }
        Ok(Self {
            subject,
            entries,
            schema,
        })
    }

    /// A vector over the full 43-entry schema.
    pub fn full(subject: SubjectId, entries: Vec<u8>) -> Result<Self> {
        Self::new(subject, entries, FeatureSchema::full())
    }

    pub fn subject(&self) -> &SubjectId {
        &self.subject
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    pub fn schema(&self) -> &Arc<FeatureSchema> {
        &self.schema
    }

    /// Entries belonging to `categories`, in schema order.
    pub fn subvector(&self, categories: &[Category]) -> Vec<u8> {
        self.schema
            .positions(categories)
            .into_iter()
            .map(|i| self.entries[i])
            .collect()
    }

    /// A new vector keeping only `categories`.
    pub fn restrict(&self, categories: &[Category]) -> FeatureVector {
        let schema = FeatureSchema {
            features: self
                .schema
                .features
                .iter()
                .copied()
                .filter(|(c, _)| categories.contains(c))
                .collect(),
        };
        FeatureVector {
            subject: self.subject.clone(),
            entries: self.subvector(categories),
            schema: Arc::new(schema),
        }
    }
}

/// Reads `subject_id,<43 feature names>` with strictly 0/1 values.
pub fn read_features_csv(reader: impl Read) -> Result<BTreeMap<SubjectId, FeatureVector>> {
    let schema = FeatureSchema::full();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let expected: Vec<&str> = std::iter::once("subject_id")
        .chain(schema.names())
        .collect();
    let got: Vec<String> = header.iter().map(|h| h.to_ascii_lowercase()).collect();
    if got != expected {
        return Err(Error::InvalidFeatures(format!(
            "header must be `{}`",
            expected.join(",")
        )));
    }
    let mut out = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let subject = SubjectId::new(&record[0])?;
        let mut entries = Vec::with_capacity(schema.len());
        for (j, field) in record.iter().skip(1).enumerate() {
            entries.push(match field {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(Error::NonBinaryFeature {
                        subject: subject.to_string(),
                        feature: expected[j + 1].to_string(),
                        value: other.to_string(),
                    })
                }
            });
        }
        let fv = FeatureVector::new(subject.clone(), entries, schema.clone())?;
        if out.insert(subject.clone(), fv).is_some() {
            return Err(Error::InvalidFeatures(format!(
                "duplicate subject {subject}"
            )));
        }
    }
    Ok(out)
}

pub fn write_features_csv<'a>(
    writer: impl Write,
    features: impl IntoIterator<Item = &'a FeatureVector>,
) -> Result<()> {
    let schema = FeatureSchema::full();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(std::iter::once("subject_id").chain(schema.names()))?;
    for fv in features {
        let row: Vec<String> = std::iter::once(fv.subject.to_string())
            .chain(fv.entries.iter().map(|e| e.to_string()))
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
