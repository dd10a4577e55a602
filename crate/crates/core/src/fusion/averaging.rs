//! Robust averaging of keyframe poses into a single reference pose.

use nalgebra::{Matrix4, SymmetricEigen, Vector4};

use crate::error::{Error, Result};
use crate::geometry::{UnitQuaternion, Vec3};

/// Geometric median of `points` by Weiszfeld iteration.
///
/// The iteration stops when a step moves less than `tol` or after
/// `max_iter` steps. Before iterating, every data point is tested against
/// the exact vertex optimality condition (the unit-vector pull of the other
/// points has norm at most the point's multiplicity); if an iterate later
/// lands within `tol` of a data point, that data point is returned.
pub fn weiszfeld_median(points: &[Vec3], tol: f64, max_iter: usize) -> Result<Vec3> {
    let first = *points.first().ok_or(Error::Empty("weiszfeld_median"))?;
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("weiszfeld_median"));
    }
    if points.len() == 1 {
        return Ok(first);
    }

    if let Some(vertex) = optimal_vertex(points) {
        return Ok(vertex);
    }

    let n = points.len() as f64;
    let mut x = points.iter().fold(Vec3::ZERO, |acc, p| acc + *p) * (1.0 / n);
    for _ in 0..max_iter {
        let mut num = Vec3::ZERO;
        let mut den = 0.0;
        for p in points {
            let d = (x - *p).norm();
            if d < tol {
                return Ok(*p);
            }
            num += *p * (1.0 / d);
            den += 1.0 / d;
        }
        let next = num * (1.0 / den);
        let step = (next - x).norm();
        x = next;
        if step < tol {
            break;
        }
    }
    Ok(x)
}

fn optimal_vertex(points: &[Vec3]) -> Option<Vec3> {
    points.iter().find_map(|candidate| {
        let mut pull = Vec3::ZERO;
        let mut multiplicity = 0.0;
        for p in points {
            let d = *candidate - *p;
            let dist = d.norm();
            if dist == 0.0 {
                multiplicity += 1.0;
            } else {
                pull += d * (1.0 / dist);
            }
        }
        (pull.norm() <= multiplicity).then_some(*candidate)
    })
}

/// Rotation average: principal eigenvector of `Σ q qᵀ` after aligning every
/// quaternion's sign with the first one.
pub fn average_quaternions(quats: &[UnitQuaternion]) -> Result<UnitQuaternion> {
    let first = *quats.first().ok_or(Error::Empty("average_quaternions"))?;
    if quats.len() == 1 {
        return Ok(first);
    }

    let reference = Vector4::from(first.to_array());
    let mut acc = Matrix4::<f64>::zeros();
    for q in quats {
        let mut v = Vector4::from(q.to_array());
        if v.dot(&reference) < 0.0 {
            v = -v;
        }
        acc += v * v.transpose();
    }

    let eig = SymmetricEigen::new(acc);
    let best = eig.eigenvalues.imax();
    let v = eig.eigenvectors.column(best);
    UnitQuaternion::new(v[0], v[1], v[2], v[3])
}
