//! Fixed quadrature rules: a symmetric 12-point triangle rule exact for
//! degree 6 and a 4-point Gauss-Legendre rule on edges exact for degree 7.

/// Barycentric points and weights normalized to sum to one; multiply by the
/// cell area to integrate.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

/// Points in `[0, 1]` with weights summing to one; multiply by the edge length.
#[derive(Clone, Debug)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

// Dunavant (1985), degree 6.
const D6_ORBIT3: [(f64, f64); 2] = [
    (0.249_286_745_170_910, 0.116_786_275_726_379),
    (0.063_089_014_491_502, 0.050_844_906_370_207),
];
const D6_ORBIT6: (f64, f64, f64) = (0.053_145_049_844_817, 0.310_352_451_033_784, 0.082_851_075_618_374);

pub fn triangle_degree6() -> TriangleRule {
    let mut points = Vec::with_capacity(12);
    let mut weights = Vec::with_capacity(12);
    for &(a, w) in D6_ORBIT3.iter() {
        let b = 1.0 - 2.0 * a;
        for p in [[b, a, a], [a, b, a], [a, a, b]] {
            points.push(p);
            weights.push(w);
        }
    }
    let (a, b, w) = D6_ORBIT6;
    let c = 1.0 - a - b;
    for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        points.push(p);
        weights.push(w);
    }
    TriangleRule { points, weights }
}

pub fn edge_gauss4() -> EdgeRule {
    let nodes = [0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    let w = [0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    let mut points = Vec::with_capacity(4);
    let mut weights = Vec::with_capacity(4);
    for (x, wx) in nodes.iter().zip(w.iter()) {
        points.push(0.5 * (1.0 - x));
        weights.push(0.5 * wx);
        points.push(0.5 * (1.0 + x));
        weights.push(0.5 * wx);
    }
    EdgeRule { points, weights }
}

thread_local! {
    static TRI6: TriangleRule = triangle_degree6();
    static EDGE4: EdgeRule = edge_gauss4();
}

pub fn with_triangle_rule<R>(f: impl FnOnce(&TriangleRule) -> R) -> R {
    TRI6.with(f)
}

pub fn with_edge_rule<R>(f: impl FnOnce(&EdgeRule) -> R) -> R {
    EDGE4.with(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// Exact `int_T l1^a l2^b l3^c / |T| = 2 a! b! c! / (a+b+c+2)!`.
    fn exact_bary_moment(a: u32, b: u32, c: u32) -> f64 {
        2.0 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2)
    }

    #[test]
    fn triangle_rule_is_exact_to_degree_six() {
        let rule = triangle_degree6();
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for a in 0..=6 {
            for b in 0..=(6 - a) {
                for c in 0..=(6 - a - b) {
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(rule.weights.iter())
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32))
                        .sum();
                    let e = exact_bary_moment(a, b, c);
                    assert!((q - e).abs() < 1e-13 * e.max(1e-3), "{a} {b} {c}: {q} vs {e}");
                }
            }
        }
    }

    #[test]
    fn edge_rule_is_exact_to_degree_seven() {
        let rule = edge_gauss4();
        for k in 0..=7 {
            let q: f64 = rule.points.iter().zip(rule.weights.iter()).map(|(t, w)| w * t.powi(k)).sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-15, "degree {k}");
        }
    }
}
