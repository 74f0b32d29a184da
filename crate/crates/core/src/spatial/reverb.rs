use crate::audio::AudioClip;

use super::RoomSpec;

const COMB_DELAYS_MS: [f64; 4] = [29.7, 37.1, 41.1, 43.7];
const ALLPASS_DELAYS_MS: [f64; 2] = [5.0, 1.7];
const ALLPASS_GAIN: f64 = 0.7;
const COMB_MIX: f64 = 0.5;

fn delay_samples(ms: f64, fs: f64) -> usize {
    ((ms * fs / 1000.0).round() as usize).max(1)
}

fn comb(x: &[f64], delay: usize, feedback: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    for n in delay..y.len() {
        y[n] += feedback * y[n - delay];
    }
    y
}

fn allpass(x: &[f64], delay: usize, g: f64) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    for n in 0..x.len() {
        let (xd, yd) = if n >= delay {
            (x[n - delay], y[n - delay])
        } else {
            (0.0, 0.0)
        };
        y[n] = -g * x[n] + xd + g * yd;
    }
    y
}

/// Four parallel feedback combs into two series allpasses, blended with
/// the dry signal. The output is extended by `rt60_s` seconds of tail.
/// Dry rooms (`rt60 == 0` or `wet == 0`) return the input unchanged.
pub fn schroeder_reverb(clip: &AudioClip, room: &RoomSpec) -> AudioClip {
    if room.is_dry() {
        return clip.clone();
    }
    let fs = clip.sample_rate() as f64;
    let tail = (room.rt60_s * fs).round() as usize;
    let wet = room.wet_ratio;
    clip.map_channels(|mut x| {
        x.resize(x.len() + tail, 0.0);
        let mut acc = vec![0.0; x.len()];
        for ms in COMB_DELAYS_MS {
            let g = 10f64.powf(-3.0 * ms / 1000.0 / room.rt60_s);
            for (a, v) in acc.iter_mut().zip(comb(&x, delay_samples(ms, fs), g)) {
                *a += COMB_MIX * v;
            }
        }
        for ms in ALLPASS_DELAYS_MS {
            acc = allpass(&acc, delay_samples(ms, fs), ALLPASS_GAIN);
        }
        x.iter().zip(&acc).map(|(d, r)| (1.0 - wet) * d + wet * r).collect()
    })
}
