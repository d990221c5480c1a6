//! Labeled image sets and the `labels.tsv` manifest (`filename<TAB>grade`).

use std::fs;
use std::path::Path;

use crate::image::{load_image, GrayImage};
use crate::pipeline::PipelineError;
use crate::som::Grade;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub name: String,
    pub grade: Grade,
    pub image: GrayImage,
}

pub fn parse_labels(text: &str) -> Result<Vec<(String, Grade)>, PipelineError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad =
            || PipelineError::Labels(format!("line {}: expected `filename<TAB>grade`", i + 1));
        let (name, grade) = line.split_once('\t').ok_or_else(bad)?;
        let grade: u8 = grade.trim().parse().map_err(|_| bad())?;
        let grade =
            Grade::new(grade).map_err(|e| PipelineError::Labels(format!("line {}: {e}", i + 1)))?;
        if name.is_empty() {
            return Err(bad());
        }
        out.push((name.to_string(), grade));
    }
    Ok(out)
}

pub fn write_labels(entries: &[(String, Grade)]) -> String {
    entries
        .iter()
        .map(|(name, grade)| format!("{name}\t{grade}\n"))
        .collect()
}

/// Loads the images listed in `labels` (default `<dir>/labels.tsv`), keeping
/// only names containing `_<role>_` when a role filter is given.
pub fn load_labeled_dir(
    dir: impl AsRef<Path>,
    labels: Option<&Path>,
    role: Option<&str>,
) -> Result<Vec<LabeledImage>, PipelineError> {
    let dir = dir.as_ref();
    let labels_path = labels.map_or_else(|| dir.join("labels.tsv"), Path::to_path_buf);
    let text = fs::read_to_string(&labels_path).map_err(|e| {
        PipelineError::Labels(format!("cannot read {}: {e}", labels_path.display()))
    })?;
    let tag = role.map(|r| format!("_{r}_"));
    parse_labels(&text)?
        .into_iter()
        .filter(|(name, _)| tag.as_ref().is_none_or(|t| name.contains(t.as_str())))
        .map(|(name, grade)| {
            let image = load_image(dir.join(&name))?.into_gray();
            Ok(LabeledImage { name, grade, image })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_roundtrip() {
        let entries = vec![
            ("g1_train_0.png".to_string(), Grade::new(1).unwrap()),
            ("a b.png".to_string(), Grade::new(5).unwrap()),
        ];
        let text = write_labels(&entries);
        assert_eq!(text, "g1_train_0.png\t1\na b.png\t5\n");
        assert_eq!(parse_labels(&text).unwrap(), entries);
    }

    #[test]
    fn labels_errors() {
        assert!(parse_labels("x.png 3\n").is_err());
        assert!(parse_labels("x.png\t9\n").is_err());
        assert!(parse_labels("\t2\n").is_err());
        assert_eq!(parse_labels("# header\n\n").unwrap(), vec![]);
    }
}
