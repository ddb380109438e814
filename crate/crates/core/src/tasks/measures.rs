use std::collections::BTreeMap;

use crate::error::{Error, Result};

use super::FrameAnnotation;

fn lookup<'a>(frame: &'a FrameAnnotation, id: &str) -> Result<&'a super::ObjectState> {
    frame.get(id).ok_or_else(|| Error::AbsentObject {
        id: id.to_string(),
        frame: frame.t,
    })
}

/// Componentwise bbox difference `cur - prev` as `(dx, dy, dw, dh)`.
pub fn delta_bbox(
    prev: &FrameAnnotation,
    cur: &FrameAnnotation,
    id: &str,
) -> Result<(f64, f64, f64, f64)> {
    let a = lookup(prev, id)?.bbox;
    let b = lookup(cur, id)?.bbox;
    Ok((b.x - a.x, b.y - a.y, b.w - a.w, b.h - a.h))
}

/// Euclidean distance between an object's appearance vectors in two frames.
pub fn appearance_drift(prev: &FrameAnnotation, cur: &FrameAnnotation, id: &str) -> Result<f64> {
    let a = &lookup(prev, id)?.appearance;
    let b = &lookup(cur, id)?.appearance;
    l2_distance(a, b)
}

pub(crate) fn l2_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "appearance dimensions differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Shannon entropy (nats) of the weight mass pooled per distinct answer.
pub fn semantic_entropy<S: AsRef<str>>(candidates: &[(S, f64)]) -> Result<f64> {
    if candidates
        .iter()
        .any(|(_, w)| !(*w >= 0.0) || !w.is_finite())
    {
        return Err(Error::InvalidParameter(
            "candidate weights must be finite and non-negative".into(),
        ));
    }
    let mut pooled: BTreeMap<&str, f64> = BTreeMap::new();
    for (a, w) in candidates {
        *pooled.entry(a.as_ref()).or_default() += w;
    }
    let total: f64 = pooled.values().sum();
    if total <= 0.0 {
        return Err(Error::InvalidParameter(
            "semantic entropy needs at least one positive weight".into(),
        ));
    }
    Ok(pooled
        .values()
        .filter(|w| **w > 0.0)
        .map(|w| w / total * (total / w).ln())
        .fold(0.0, |acc, h| acc + h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::{BBox, ObjectState};
    use proptest::prelude::*;

    fn frame(t: usize, id: &str, bbox: BBox, appearance: Vec<f64>) -> FrameAnnotation {
        FrameAnnotation {
            t,
            objects: vec![ObjectState {
                id: id.into(),
                bbox,
                label: "car".into(),
                attributes: Default::default(),
                appearance,
            }],
        }
    }

    #[test]
    fn identical_boxes_have_zero_delta() {
        let b = BBox::new(10.0, 10.0, 5.0, 5.0);
        let (p, c) = (frame(0, "a", b, vec![]), frame(1, "a", b, vec![]));
        assert_eq!(delta_bbox(&p, &c, "a").unwrap(), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn horizontal_shift() {
        let p = frame(0, "a", BBox::new(10.0, 10.0, 5.0, 5.0), vec![]);
        let c = frame(1, "a", BBox::new(13.0, 10.0, 5.0, 5.0), vec![]);
        assert_eq!(delta_bbox(&p, &c, "a").unwrap(), (3.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn absent_object() {
        let p = frame(0, "a", BBox::new(0.0, 0.0, 1.0, 1.0), vec![]);
        let c = frame(1, "b", BBox::new(0.0, 0.0, 1.0, 1.0), vec![]);
        assert!(matches!(
            delta_bbox(&p, &c, "a"),
            Err(Error::AbsentObject { frame: 1, .. })
        ));
        assert!(appearance_drift(&p, &c, "b").is_err());
    }

    #[test]
    fn drift_three_four_five() {
        let b = BBox::new(0.0, 0.0, 1.0, 1.0);
        let p = frame(0, "a", b, vec![0.0, 0.0]);
        let c = frame(1, "a", b, vec![3.0, 4.0]);
        assert_eq!(appearance_drift(&p, &c, "a").unwrap(), 5.0);
        assert_eq!(appearance_drift(&p, &p, "a").unwrap(), 0.0);
        let d = frame(1, "a", b, vec![3.0]);
        assert!(matches!(
            appearance_drift(&p, &d, "a"),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(semantic_entropy(&[("yes", 3.0)]).unwrap(), 0.0);
        let two = semantic_entropy(&[("yes", 1.0), ("no", 1.0)]).unwrap();
        assert!((two - std::f64::consts::LN_2).abs() < 1e-15);
        // (0.25, 0.25, 0.5): 2 * 0.25 ln 4 + 0.5 ln 2 = 1.5 ln 2.
        let h = semantic_entropy(&[("a", 1.0), ("b", 1.0), ("c", 2.0)]).unwrap();
        assert!((h - 1.5 * std::f64::consts::LN_2).abs() < 1e-15);
        // Duplicate answers pool their weight.
        let pooled = semantic_entropy(&[("a", 1.0), ("a", 1.0), ("b", 2.0)]).unwrap();
        assert!((pooled - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(semantic_entropy(&[("a", 0.0)]).is_err());
        assert!(semantic_entropy::<&str>(&[]).is_err());
    }

    proptest! {
        #[test]
        fn delta_matches_subtraction(v in prop::collection::vec(-100.0f64..100.0, 8)) {
            let p = frame(0, "a", BBox::new(v[0], v[1], v[2], v[3]), vec![]);
            let c = frame(1, "a", BBox::new(v[4], v[5], v[6], v[7]), vec![]);
            let d = delta_bbox(&p, &c, "a").unwrap();
            prop_assert_eq!(d, (v[4] - v[0], v[5] - v[1], v[6] - v[2], v[7] - v[3]));
        }

        #[test]
        fn drift_matches_norm(a in prop::collection::vec(-5.0f64..5.0, 16), b in prop::collection::vec(-5.0f64..5.0, 16)) {
            let bb = BBox::new(0.0, 0.0, 1.0, 1.0);
            let got = appearance_drift(&frame(0, "x", bb, a.clone()), &frame(1, "x", bb, b.clone()), "x").unwrap();
            let mut acc = 0.0;
            for i in 0..16 {
                acc += (a[i] - b[i]).powi(2);
            }
            prop_assert!((got - acc.sqrt()).abs() < 1e-12);
        }

        #[test]
        fn entropy_bounded_by_uniform(ws in prop::collection::vec(0.01f64..10.0, 1..12)) {
            let cands: Vec<(String, f64)> = ws.iter().enumerate().map(|(i, w)| (format!("a{i}"), *w)).collect();
            let h = semantic_entropy(&cands).unwrap();
            let n = ws.len() as f64;
            prop_assert!(h >= 0.0);
            prop_assert!(h <= n.ln() + 1e-12);
            let uniform: Vec<(String, f64)> = (0..ws.len()).map(|i| (format!("a{i}"), 1.0)).collect();
            prop_assert!((semantic_entropy(&uniform).unwrap() - n.ln()).abs() < 1e-12);
        }
    }
}
