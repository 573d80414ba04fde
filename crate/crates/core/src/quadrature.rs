//! Quadrature rules on triangles and edges.

/// Point in barycentric coordinates with a weight relative to the element area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriPoint {
    pub bary: [f64; 3],
    pub weight: f64,
}

/// Three-point rule exact for polynomials of degree 2.
pub fn triangle_degree2() -> Vec<TriPoint> {
    let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
    vec![
        TriPoint { bary: [a, b, b], weight: 1.0 / 3.0 },
        TriPoint { bary: [b, a, b], weight: 1.0 / 3.0 },
        TriPoint { bary: [b, b, a], weight: 1.0 / 3.0 },
    ]
}

/// Six-point symmetric rule exact for polynomials of degree 4.
pub fn triangle_degree4() -> Vec<TriPoint> {
    let (a, wa) = (0.445_948_490_915_965, 0.223_381_589_678_011);
    let (b, wb) = (0.091_576_213_509_771, 0.109_951_743_655_322);
    let mut pts = Vec::with_capacity(6);
    for (p, w) in [(a, wa), (b, wb)] {
        let q = 1.0 - 2.0 * p;
        pts.push(TriPoint { bary: [q, p, p], weight: w });
        pts.push(TriPoint { bary: [p, q, p], weight: w });
        pts.push(TriPoint { bary: [p, p, q], weight: w });
    }
    pts
}

/// Rule used for element matrices of the given polynomial degree.
pub fn triangle_rule(degree: usize) -> Vec<TriPoint> {
    if degree <= 1 {
        triangle_degree2()
    } else {
        triangle_degree4()
    }
}

/// Three-point Gauss rule on `[0, 1]` as `(t, weight)` pairs, exact to degree 5.
pub fn edge_gauss3() -> [(f64, f64); 3] {
    let d = 0.5 * (3.0f64 / 5.0).sqrt();
    [(0.5 - d, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + d, 5.0 / 18.0)]
}
