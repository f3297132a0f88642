use libm::{erf, erfc};

const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// `int_{xl}^{xr} exp(-t^2 x^2) dx`.
pub fn cell_integral(t: f64, xl: f64, xr: f64) -> f64 {
    let t = t.abs();
    let w = xr - xl;
    if t == 0.0 {
        return w;
    }
    let far = xl.abs().max(xr.abs());
    if t * t * far * w + t * w < 0.5 {
        // integrand nearly constant on the cell: 8-point Gauss-Legendre
        let (c, hw) = (0.5 * (xl + xr), 0.5 * w);
        let f = |x: f64| (-(t * x) * (t * x)).exp();
        let s: f64 = GL_NODES
            .iter()
            .zip(GL_WEIGHTS)
            .map(|(x, g)| g * (f(c - hw * x) + f(c + hw * x)))
            .sum();
        return hw * s;
    }
    let k = 0.5 * std::f64::consts::PI.sqrt() / t;
    if xl >= 0.0 {
        k * (erfc(t * xl) - erfc(t * xr))
    } else if xr <= 0.0 {
        k * (erfc(-t * xr) - erfc(-t * xl))
    } else {
        k * (erf(t * xr) + erf(-t * xl))
    }
}

fn prism_antiderivative(x: f64, y: f64, z: f64) -> f64 {
    let r = (x * x + y * y + z * z).sqrt();
    let term = |a: f64, b: f64, c: f64| {
        // a b ln(c + r) - c^2/2 atan(a b / (c r)), with limits at zero
        let mut v = 0.0;
        if a != 0.0 && b != 0.0 {
            let s = if c >= 0.0 {
                c + r
            } else {
                (a * a + b * b) / (r - c)
            };
            if s > 0.0 {
                v += a * b * s.ln();
            }
        }
        if c != 0.0 && r > 0.0 {
            v -= 0.5 * c * c * (a * b / (c * r)).atan();
        }
        v
    };
    term(y, z, x) + term(x, z, y) + term(x, y, z)
}

/// Mean of `1/|x|` over the axis-aligned cube of side `h` centered at `c`.
pub fn cube_average_inverse_r(c: [f64; 3], h: f64) -> f64 {
    let mut s = 0.0;
    for (i, sx) in [-0.5, 0.5].iter().enumerate() {
        for (j, sy) in [-0.5, 0.5].iter().enumerate() {
            for (k, sz) in [-0.5, 0.5].iter().enumerate() {
                let sign = if (i + j + k) % 2 == 1 { 1.0 } else { -1.0 };
                s += sign * prism_antiderivative(c[0] + sx * h, c[1] + sy * h, c[2] + sz * h);
            }
        }
    }
    s / (h * h * h)
}
