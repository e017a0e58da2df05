use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{InkError, Result};
use crate::geom::Point;

/// Reciprocal condition number below which the normal system is singular.
pub const COLLINEAR_CONDITION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleFit {
    pub center: Point,
    pub radius: f64,
    /// RMS of |distance to center - radius|.
    pub rms_residual: f64,
}

/// Algebraic least-squares circle: minimizes the sum of
/// `(x^2 + y^2 + D x + E y + F)^2` over the points.
///
/// Points are centered and scaled before solving so that the conditioning
/// test does not depend on page position or drawing size.
pub fn fit_circle(points: &[Point]) -> Result<CircleFit> {
    if points.len() < 3 {
        return Err(InkError::TooFewPoints { needed: 3, got: points.len() });
    }
    let n = points.len() as f64;
    let mean = points.iter().fold(Point::default(), |a, p| a + *p).scale(1.0 / n);
    let scale = (points.iter().map(|p| (*p - mean).dot(*p - mean)).sum::<f64>() / n).sqrt();
    if scale == 0.0 {
        return Err(InkError::CollinearPoints { condition: 0.0 });
    }

    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for p in points {
        let q = (*p - mean).scale(1.0 / scale);
        let row = Vector3::new(q.x, q.y, 1.0);
        let z = q.x * q.x + q.y * q.y;
        ata += row * row.transpose();
        atb -= row * z;
    }

    let eig = SymmetricEigen::new(ata);
    let max = eig.eigenvalues.iter().copied().fold(0.0_f64, |a, b| a.max(b.abs()));
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, |a, b| a.min(b.abs()));
    let condition = if max > 0.0 { min / max } else { 0.0 };
    if condition < COLLINEAR_CONDITION {
        return Err(InkError::CollinearPoints { condition });
    }
    let sol = ata.cholesky().map(|c| c.solve(&atb)).ok_or(InkError::CollinearPoints { condition })?;
    let (d, e, f) = (sol[0], sol[1], sol[2]);
    let cx = -0.5 * d;
    let cy = -0.5 * e;
    let r2 = cx * cx + cy * cy - f;
    if !(r2 > 0.0) {
        return Err(InkError::CollinearPoints { condition });
    }
    let center = Point::new(cx * scale + mean.x, cy * scale + mean.y);
    let radius = r2.sqrt() * scale;
    let rms = (points
        .iter()
        .map(|p| {
            let d = p.distance(center) - radius;
            d * d
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(CircleFit { center, radius, rms_residual: rms })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_circle() {
        let pts: Vec<Point> = (0..36)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / 36.0;
                Point::new(10.0 + 5.0 * a.cos(), 10.0 + 5.0 * a.sin())
            })
            .collect();
        let fit = fit_circle(&pts).unwrap();
        assert!(fit.center.distance(Point::new(10.0, 10.0)) < 1e-9);
        assert!((fit.radius - 5.0).abs() < 1e-9);
        assert!(fit.rms_residual < 1e-9);
    }

    #[test]
    fn collinear_rejected() {
        let pts = [Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(2.0, 2.0)];
        assert!(matches!(fit_circle(&pts), Err(InkError::CollinearPoints { .. })));
        let many: Vec<Point> = (0..50).map(|i| Point::new(100.0 + i as f64, 3.0)).collect();
        assert!(matches!(fit_circle(&many), Err(InkError::CollinearPoints { .. })));
    }

    #[test]
    fn too_few_points() {
        let pts = [Point::new(0.0, 0.0), Point::new(1.0, 1.0)];
        assert_eq!(fit_circle(&pts), Err(InkError::TooFewPoints { needed: 3, got: 2 }));
    }

    #[test]
    fn square_is_not_concyclic() {
        // corners of a square are concyclic, but its edge midpoints are closer
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 2.0),
            Point::new(0.0, 2.0),
        ];
        assert!(fit_circle(&pts).unwrap().rms_residual > 1e-3);
    }
}
