//! Delimited-text annotation timeline.
//!
//! ```text
//! t,id,x,y,w,h,label,attrs,a1,a2,a3
//! 0,car1,10,12,20,10,car,color=red;shape=box,0.1,0.2,0.3
//! ```
//!
//! The header fixes the appearance dimension `d` as the number of columns
//! after `attrs`. `attrs` is a `;`-separated list of `key=value` pairs and may
//! be empty. Lines starting with `#` are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{canonicalize, BBox, FrameAnnotation, ObjectState};

const FIXED_COLUMNS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub width: usize,
    pub height: usize,
}

pub fn ingest_annotations(
    path: impl AsRef<Path>,
    bounds: FrameBounds,
) -> Result<Vec<FrameAnnotation>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_annotations(&text, bounds)
}

/// Parses and validates a timeline. Frames missing between 0 and the last
/// annotated index are returned empty.
pub fn parse_annotations(text: &str, bounds: FrameBounds) -> Result<Vec<FrameAnnotation>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());

    let mut dim: Option<usize> = None;
    let mut by_frame: BTreeMap<usize, Vec<ObjectState>> = BTreeMap::new();
    let mut seen: BTreeSet<(usize, String)> = BTreeSet::new();

    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let Some(d) = dim else {
            if record.len() < FIXED_COLUMNS || &record[0] != "t" {
                return Err(Error::Parse {
                    line,
                    message: "expected header `t,id,x,y,w,h,label,attrs,a1..ad`".into(),
                });
            }
            dim = Some(record.len() - FIXED_COLUMNS);
            continue;
        };
        if record.len() != FIXED_COLUMNS + d {
            return Err(Error::Parse {
                line,
                message: format!(
                    "expected {} columns, found {}",
                    FIXED_COLUMNS + d,
                    record.len()
                ),
            });
        }
        let num = |i: usize, name: &str| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("column `{name}`: `{}` is not a finite number", &record[i]),
                })
        };
        let t: usize = record[0].parse().map_err(|_| Error::Parse {
            line,
            message: format!("frame index `{}` is not a non-negative integer", &record[0]),
        })?;
        let id = record[1].to_string();
        if id.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty object id".into(),
            });
        }
        let bbox = BBox::new(num(2, "x")?, num(3, "y")?, num(4, "w")?, num(5, "h")?);
        let label = canonicalize(&record[6]);
        let mut attributes = BTreeMap::new();
        for pair in record[7]
            .split(';')
            .map(str::trim)
            .filter(|p| !p.is_empty())
        {
            let (k, v) = pair.split_once('=').ok_or_else(|| Error::Parse {
                line,
                message: format!("attribute `{pair}` is not key=value"),
            })?;
            attributes.insert(canonicalize(k), canonicalize(v));
        }
        let appearance = (0..d)
            .map(|j| num(FIXED_COLUMNS + j, "appearance"))
            .collect::<Result<Vec<_>>>()?;

        if !(bbox.w > 0.0 && bbox.h > 0.0) {
            return Err(Error::Validation(format!(
                "line {line}: bbox of `{id}` must have positive size"
            )));
        }
        if bbox.x < 0.0
            || bbox.y < 0.0
            || bbox.x + bbox.w > bounds.width as f64
            || bbox.y + bbox.h > bounds.height as f64
        {
            return Err(Error::Validation(format!(
                "line {line}: bbox of `{id}` at frame {t} leaves the {}x{} frame",
                bounds.width, bounds.height
            )));
        }
        if !seen.insert((t, id.clone())) {
            return Err(Error::Validation(format!(
                "line {line}: duplicate object `{id}` in frame {t}"
            )));
        }
        by_frame.entry(t).or_default().push(ObjectState {
            id,
            bbox,
            label,
            attributes,
            appearance,
        });
    }

    let Some(&last) = by_frame.keys().next_back() else {
        return Ok(Vec::new());
    };
    Ok((0..=last)
        .map(|t| FrameAnnotation {
            t,
            objects: by_frame.remove(&t).unwrap_or_default(),
        })
        .collect())
}
