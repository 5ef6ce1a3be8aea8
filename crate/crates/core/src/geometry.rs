//! Point-cloud normalization, farthest point sampling and nearest-neighbour
//! correspondence.
//!
//! Every sample of a class ends up as an `n x 3` matrix whose rows are in
//! correspondence with a reference cloud, which is what the shape model needs.
//! Ties are always broken towards the lowest index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 3];

#[inline]
pub fn dist2(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

#[inline]
pub fn norm2(a: &Point) -> f64 {
    a[0] * a[0] + a[1] * a[1] + a[2] * a[2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Point>,
    pub label: Option<String>,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Self {
        Self {
            points,
            label: None,
        }
    }

    pub fn labeled(points: Vec<Point>, label: impl Into<String>) -> Self {
        Self {
            points,
            label: Some(label.into()),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Point {
        let mut c = [0.0; 3];
        for p in &self.points {
            c[0] += p[0];
            c[1] += p[1];
            c[2] += p[2];
        }
        let inv = 1.0 / self.points.len().max(1) as f64;
        [c[0] * inv, c[1] * inv, c[2] * inv]
    }

    pub fn max_norm(&self) -> f64 {
        self.points.iter().map(norm2).fold(0.0, f64::max).sqrt()
    }

    fn check(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if self.points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("point cloud"));
        }
        Ok(())
    }
}

/// Center on the centroid and scale so the farthest point has norm 1.
///
/// A cloud whose points are all identical collapses to zeros.
pub fn normalize(pc: &PointCloud) -> Result<PointCloud> {
    pc.check()?;
    let first = pc.points[0];
    if pc.points.iter().all(|p| *p == first) {
        return Ok(PointCloud {
            points: vec![[0.0; 3]; pc.len()],
            label: pc.label.clone(),
        });
    }
    let c = pc.centroid();
    let mut points: Vec<Point> = pc
        .points
        .iter()
        .map(|p| [p[0] - c[0], p[1] - c[1], p[2] - c[2]])
        .collect();
    let scale = points.iter().map(norm2).fold(0.0, f64::max).sqrt();
    if scale > 0.0 {
        for p in &mut points {
            p[0] /= scale;
            p[1] /= scale;
            p[2] /= scale;
        }
    }
    Ok(PointCloud {
        points,
        label: pc.label.clone(),
    })
}

/// Greedy farthest point sampling.
///
/// Starts at the point of largest norm, then repeatedly takes the point whose
/// distance to the chosen set is largest. Output order is pick order.
pub fn farthest_point_sample(pc: &PointCloud, n: usize) -> Result<PointCloud> {
    pc.check()?;
    if n > pc.len() {
        return Err(Error::BudgetExceeds {
            requested: n,
            available: pc.len(),
        });
    }
    if n == 0 {
        return Err(Error::BudgetExceeds {
            requested: 0,
            available: pc.len(),
        });
    }
    let pts = &pc.points;
    let mut first = 0;
    let mut best = norm2(&pts[0]);
    for (i, p) in pts.iter().enumerate().skip(1) {
        let v = norm2(p);
        if v > best {
            best = v;
            first = i;
        }
    }

    let mut chosen = vec![false; pts.len()];
    let mut min_d = vec![f64::INFINITY; pts.len()];
    let mut order = Vec::with_capacity(n);
    let mut current = first;
    loop {
        chosen[current] = true;
        order.push(current);
        if order.len() == n {
            break;
        }
        let c = pts[current];
        let mut next = usize::MAX;
        let mut far = f64::NEG_INFINITY;
        for (i, p) in pts.iter().enumerate() {
            if chosen[i] {
                continue;
            }
            let d = dist2(p, &c);
            if d < min_d[i] {
                min_d[i] = d;
            }
            if min_d[i] > far {
                far = min_d[i];
                next = i;
            }
        }
        current = next;
    }

    Ok(PointCloud {
        points: order.into_iter().map(|i| pts[i]).collect(),
        label: pc.label.clone(),
    })
}

/// For each reference point, the nearest target point (targets may repeat).
pub fn correspond(reference: &PointCloud, target: &PointCloud) -> Result<Vec<Point>> {
    if target.is_empty() {
        return Err(Error::EmptyTarget);
    }
    let rows = reference
        .points
        .iter()
        .map(|r| {
            let mut best = 0;
            let mut best_d = dist2(r, &target.points[0]);
            for (j, t) in target.points.iter().enumerate().skip(1) {
                let d = dist2(r, t);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            target.points[best]
        })
        .collect();
    Ok(rows)
}

/// `m` samples of one class, each an `n x 3` matrix in row correspondence
/// with `reference`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondedSet {
    pub class_id: String,
    pub reference: PointCloud,
    pub members: Vec<Vec<Point>>,
}

impl CorrespondedSet {
    /// Wrap matrices that are already in correspondence.
    pub fn new(class_id: impl Into<String>, members: Vec<Vec<Point>>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::DimensionMismatch("corresponded set needs m >= 1".into()))?;
        let n = first.len();
        if n == 0 {
            return Err(Error::EmptyCloud);
        }
        if let Some(bad) = members.iter().find(|m| m.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "member has {} rows, expected {n}",
                bad.len()
            )));
        }
        Ok(Self {
            class_id: class_id.into(),
            reference: PointCloud::new(first.clone()),
            members,
        })
    }

    /// Correspond every cloud against `reference` by nearest neighbour.
    pub fn from_clouds(
        class_id: impl Into<String>,
        reference: &PointCloud,
        clouds: &[PointCloud],
    ) -> Result<Self> {
        if clouds.is_empty() {
            return Err(Error::DimensionMismatch(
                "corresponded set needs m >= 1".into(),
            ));
        }
        if reference.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let members = clouds
            .iter()
            .map(|c| correspond(reference, c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            class_id: class_id.into(),
            reference: reference.clone(),
            members,
        })
    }

    pub fn n(&self) -> usize {
        self.reference.len()
    }

    pub fn m(&self) -> usize {
        self.members.len()
    }
}
