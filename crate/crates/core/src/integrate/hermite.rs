use crate::profiles::Jet;

/// Quintic Hermite interpolation through nodes carrying `(f, f′, f″)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuinticHermite {
    nodes: Vec<(f64, Jet)>,
}

impl QuinticHermite {
    /// `nodes` must be sorted by strictly increasing abscissa.
    pub fn new(nodes: Vec<(f64, Jet)>) -> Self {
        debug_assert!(nodes.windows(2).all(|w| w[1].0 > w[0].0));
        Self { nodes }
    }

    pub fn nodes(&self) -> &[(f64, Jet)] {
        &self.nodes
    }

    pub fn eval(&self, x: f64) -> Jet {
        let n = self.nodes.len();
        if n == 1 {
            return self.nodes[0].1;
        }
        let i = match self.nodes.partition_point(|node| node.0 <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        };
        let (x0, a) = self.nodes[i];
        let (x1, b) = self.nodes[i + 1];
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (t2, t3, t4, t5) = (t * t, t * t * t, t.powi(4), t.powi(5));

        // basis: value/derivative/second derivative at the left and right node
        let h00 = [
            1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
            -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
            -60.0 * t + 180.0 * t2 - 120.0 * t3,
        ];
        let h01 = [
            t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
            1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
            -36.0 * t + 96.0 * t2 - 60.0 * t3,
        ];
        let h02 = [
            0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5),
            0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4),
            0.5 * (2.0 - 18.0 * t + 36.0 * t2 - 20.0 * t3),
        ];
        let h10 = [
            10.0 * t3 - 15.0 * t4 + 6.0 * t5,
            30.0 * t2 - 60.0 * t3 + 30.0 * t4,
            60.0 * t - 180.0 * t2 + 120.0 * t3,
        ];
        let h11 = [
            -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
            -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
            -24.0 * t + 84.0 * t2 - 60.0 * t3,
        ];
        let h12 = [
            0.5 * (t3 - 2.0 * t4 + t5),
            0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4),
            0.5 * (6.0 * t - 24.0 * t2 + 20.0 * t3),
        ];

        let combine = |d: usize| {
            a.value * h00[d]
                + h * a.d1 * h01[d]
                + h * h * a.d2 * h02[d]
                + b.value * h10[d]
                + h * b.d1 * h11[d]
                + h * h * b.d2 * h12[d]
        };
        Jet::new(combine(0), combine(1) / h, combine(2) / (h * h))
    }
}
