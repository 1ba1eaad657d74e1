use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::quantum::C64;

/// Position and width of the dominant peak of a sampled spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub position: f64,
    pub height: f64,
    pub fwhm: f64,
    /// Another region above half maximum exists that is not connected to
    /// the dominant peak.
    pub ambiguous: bool,
}

/// `2 Re ∫₀^∞ g(τ) e^{−iωτ} dτ` by the trapezoid rule on the samples plus
/// an exponential tail continued from the last two samples.
pub fn spectrum_from_correlation(tau: &[f64], g: &[C64], omega: &[f64]) -> Result<Vec<f64>> {
    if tau.len() != g.len() || tau.len() < 3 {
        return Err(Error::InvalidInput(
            "correlation needs at least three samples and matching grids".into(),
        ));
    }
    if tau.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("τ must increase".into()));
    }
    let n = tau.len();
    let (ga, gb) = (g[n - 2], g[n - 1]);
    let tail_rate = if ga.norm() > 0.0 && gb.norm() > 0.0 {
        Some((gb / ga).ln() / (tau[n - 1] - tau[n - 2]))
    } else {
        None
    };
    let out = omega
        .iter()
        .map(|&w| {
            let f = |k: usize| g[k] * C64::new(0.0, -w * tau[k]).exp();
            let mut acc = C64::new(0.0, 0.0);
            let mut prev = f(0);
            for k in 1..n {
                let cur = f(k);
                acc += (prev + cur) * (0.5 * (tau[k] - tau[k - 1]));
                prev = cur;
            }
            if let Some(l) = tail_rate.filter(|l| l.re < 0.0) {
                acc += prev / (C64::new(0.0, w) - l);
            }
            2.0 * acc.re
        })
        .collect();
    Ok(out)
}

/// Same transform on a uniform grid through one zero-padded FFT.
///
/// Returns `(ω, S)` with ω increasing and spaced `2π/(len·dt)`.
pub fn fft_spectrum(dt: f64, g: &[C64], len: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(dt > 0.0) || g.len() < 2 {
        return Err(Error::InvalidInput("fft needs dt > 0 and two samples".into()));
    }
    let len = len.max(g.len()).next_power_of_two();
    let mut buf: Vec<C64> = g.iter().map(|z| z * dt).collect();
    buf[0] *= 0.5;
    buf.resize(len, C64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let dw = 2.0 * std::f64::consts::PI / (len as f64 * dt);
    let half = len / 2;
    let mut omega = Vec::with_capacity(len);
    let mut s = Vec::with_capacity(len);
    for k in half..len + half {
        let k = k % len;
        let w = if k >= half { k as f64 - len as f64 } else { k as f64 } * dw;
        omega.push(w);
        s.push(2.0 * buf[k].re);
    }
    Ok((omega, s))
}

fn crossing(w0: f64, s0: f64, w1: f64, s1: f64, level: f64) -> f64 {
    w0 + (level - s0) * (w1 - w0) / (s1 - s0)
}

/// Dominant peak by parabolic interpolation through the three highest
/// samples; FWHM from linear interpolation of both half-maximum crossings
/// of the connected region around it.
pub fn fwhm_peak(omega: &[f64], s: &[f64]) -> Result<Peak> {
    if omega.len() != s.len() || omega.len() < 3 {
        return Err(Error::NoPeak("fewer than three samples".into()));
    }
    if omega.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("frequency grid must increase".into()));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoPeak("non-finite samples".into()));
    }
    let k = (0..s.len()).max_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap_or(0);
    let top = s[k];
    if top <= 0.0 {
        return Err(Error::NoPeak("spectrum is not positive".into()));
    }
    let plateau = s.iter().filter(|&&v| (v - top).abs() <= 1e-9 * top).count();
    if plateau >= 3 {
        return Err(Error::NoPeak(format!("flat top over {plateau} samples")));
    }
    if k == 0 || k + 1 == s.len() {
        return Err(Error::NoPeak("maximum at the edge of the grid".into()));
    }
    let (x0, x1, x2) = (omega[k - 1], omega[k], omega[k + 1]);
    let (y0, y1, y2) = (s[k - 1], s[k], s[k + 1]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let c = (d12 - d01) / (x2 - x0);
    let (position, height) = if c < 0.0 {
        let x = ((x0 + x1) / 2.0 - d01 / (2.0 * c)).clamp(x0, x2);
        (x, y0 + d01 * (x - x0) + c * (x - x0) * (x - x1))
    } else {
        (x1, y1)
    };
    let height = height.max(top);
    let half = height / 2.0;
    let mut lo = k;
    while lo > 0 && s[lo - 1] >= half {
        lo -= 1;
    }
    let mut hi = k;
    while hi + 1 < s.len() && s[hi + 1] >= half {
        hi += 1;
    }
    if lo == 0 || hi + 1 == s.len() {
        return Err(Error::NoPeak("half maximum not reached inside the grid".into()));
    }
    let left = crossing(omega[lo - 1], s[lo - 1], omega[lo], s[lo], half);
    let right = crossing(omega[hi], s[hi], omega[hi + 1], s[hi + 1], half);
    let ambiguous = s[..lo].iter().chain(&s[hi + 1..]).any(|&v| v >= half);
    if ambiguous {
        log::warn!("spectrum has a second region above half maximum; reporting the dominant peak");
    }
    Ok(Peak {
        position,
        height,
        fwhm: right - left,
        ambiguous,
    })
}
