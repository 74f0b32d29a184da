//! C ABI over `foley_core`.
//!
//! Clips and trajectories are opaque handles created by `foley_*` functions
//! and released with the matching `*_free`. Fallible calls return a
//! [`FoleyStatus`] and write results through out-pointers; on failure
//! `foley_last_error` returns a message for the calling thread.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use foley_core::annotate::EventSpan;
use foley_core::audio::{load_wav, save_wav, WavEncoding};
use foley_core::metrics::{gcc_phat_azimuth, temporal_iou};
use foley_core::mix::{integrated_loudness, lfe_channel, schroeder_rt60, upmix_51};
use foley_core::spatial::{itd_of, pan_gains, render_event, RoomSpec};
use foley_core::trajectory::{azimuth_from_cue, Trajectory, VisualCue};
use foley_core::{AudioClip, Diagnostics, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoleyStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Unsupported = 5,
    Estimation = 6,
    Agent = 7,
    Json = 8,
    Panic = 9,
}

impl From<&Error> for FoleyStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Io(_) => FoleyStatus::Io,
            Error::Format(_) => FoleyStatus::Format,
            Error::Unsupported(_) => FoleyStatus::Unsupported,
            Error::Validation(_) => FoleyStatus::InvalidArgument,
            Error::Agent { .. } => FoleyStatus::Agent,
            Error::Estimation(_) => FoleyStatus::Estimation,
            Error::Json(_) => FoleyStatus::Json,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoleyEncoding {
    Pcm16 = 0,
    Float32 = 1,
}

/// Room used by `foley_render_event`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FoleyRoom {
    pub rt60_s: f64,
    pub wet_ratio: f64,
    pub interaural_m: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FoleySpan {
    pub start_s: f64,
    pub end_s: f64,
}

/// Opaque audio clip.
pub struct FoleyClip(AudioClip);

/// Opaque per-frame trajectory.
pub struct FoleyTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Fail {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> FoleyStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FoleyStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("{what} is null"));
            FoleyStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            FoleyStatus::from(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            FoleyStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<String, Fail> {
    if p.is_null() {
        return Err(Fail::Null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Fail::Core(Error::Validation("path is not valid UTF-8".into())))
}

fn clip_handle(clip: AudioClip) -> *mut FoleyClip {
    Box::into_raw(Box::new(FoleyClip(clip)))
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next `foley_*` call on the same thread.
#[no_mangle]
pub extern "C" fn foley_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn foley_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn foley_clip_new(
    sample_rate: u32,
    channels: usize,
    samples: *const f32,
    len: usize,
    out_clip: *mut *mut FoleyClip,
) -> FoleyStatus {
    guard(|| {
        let slot = out(out_clip, "out_clip")?;
        let data = if len == 0 {
            Vec::new()
        } else {
            if samples.is_null() {
                return Err(Fail::Null("samples"));
            }
            std::slice::from_raw_parts(samples, len).to_vec()
        };
        *slot = clip_handle(AudioClip::new(sample_rate, channels, data)?);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn foley_clip_load(path: *const c_char, out_clip: *mut *mut FoleyClip) -> FoleyStatus {
    guard(|| {
        let slot = out(out_clip, "out_clip")?;
        *slot = clip_handle(load_wav(path_arg(path)?)?);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn foley_clip_save(
    clip: *const FoleyClip,
    path: *const c_char,
    encoding: FoleyEncoding,
) -> FoleyStatus {
    guard(|| {
        let clip = as_ref(clip, "clip")?;
        let enc = match encoding {
            FoleyEncoding::Pcm16 => WavEncoding::Pcm16,
            FoleyEncoding::Float32 => WavEncoding::Float32,
        };
        save_wav(&clip.0, path_arg(path)?, enc, &mut Diagnostics::new())?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn foley_clip_free(clip: *mut FoleyClip) {
    if !clip.is_null() {
        drop(Box::from_raw(clip));
    }
}

/// 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn foley_clip_sample_rate(clip: *const FoleyClip) -> u32 {
    clip.as_ref().map_or(0, |c| c.0.sample_rate())
}

#[no_mangle]
pub unsafe extern "C" fn foley_clip_channels(clip: *const FoleyClip) -> usize {
    clip.as_ref().map_or(0, |c| c.0.channels())
}

#[no_mangle]
pub unsafe extern "C" fn foley_clip_frames(clip: *const FoleyClip) -> usize {
    clip.as_ref().map_or(0, |c| c.0.frames())
}

/// Copies up to `capacity` interleaved samples into `buf` and reports the
/// total sample count in `out_len`. Pass a null `buf` to query the length.
#[no_mangle]
pub unsafe extern "C" fn foley_clip_copy_samples(
    clip: *const FoleyClip,
    buf: *mut f32,
    capacity: usize,
    out_len: *mut usize,
) -> FoleyStatus {
    guard(|| {
        let clip = as_ref(clip, "clip")?;
        let samples = clip.0.samples();
        *out(out_len, "out_len")? = samples.len();
        if !buf.is_null() {
            let n = samples.len().min(capacity);
            ptr::copy_nonoverlapping(samples.as_ptr(), buf, n);
        }
        Ok(())
    })
}

/// Interaural time difference in seconds; positive when the left ear is
/// delayed.
#[no_mangle]
pub extern "C" fn foley_itd_of(azimuth_deg: f64, interaural_m: f64) -> f64 {
    itd_of(azimuth_deg, interaural_m)
}

#[no_mangle]
pub unsafe extern "C" fn foley_pan_gains(
    azimuth_deg: f64,
    depth_m: f64,
    d_ref: f64,
    out_left: *mut f64,
    out_right: *mut f64,
) -> FoleyStatus {
    guard(|| {
        if !(depth_m > 0.0 && d_ref > 0.0) {
            return Err(Error::Validation("depth and reference distance must be positive".into()).into());
        }
        let (l, r) = pan_gains(azimuth_deg, depth_m, d_ref);
        *out(out_left, "out_left")? = l;
        *out(out_right, "out_right")? = r;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn foley_azimuth_from_cue(
    box_center_x: f64,
    frame_width: f64,
    frame_height: f64,
    depth_m: f64,
    ppm: f64,
    out_azimuth_deg: *mut f64,
) -> FoleyStatus {
    guard(|| {
        let cue = VisualCue {
            frame_index: 0,
            box_center_x,
            frame_width,
            frame_height,
            depth_m,
        };
        *out(out_azimuth_deg, "out_azimuth_deg")? = azimuth_from_cue(&cue, ppm)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn foley_trajectory_constant(
    fps: f64,
    frames: usize,
    azimuth_deg: f64,
    depth_m: f64,
    out_traj: *mut *mut FoleyTrajectory,
) -> FoleyStatus {
    guard(|| {
        let slot = out(out_traj, "out_traj")?;
        let t = Trajectory::constant(fps, frames, azimuth_deg, depth_m)?;
        *slot = Box::into_raw(Box::new(FoleyTrajectory(t)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn foley_trajectory_linear(
    fps: f64,
    frames: usize,
    start_azimuth_deg: f64,
    start_depth_m: f64,
    end_azimuth_deg: f64,
    end_depth_m: f64,
    out_traj: *mut *mut FoleyTrajectory,
) -> FoleyStatus {
    guard(|| {
        let slot = out(out_traj, "out_traj")?;
        let t = Trajectory::linear(
            fps,
            frames,
            (start_azimuth_deg, start_depth_m),
            (end_azimuth_deg, end_depth_m),
        )?;
        *slot = Box::into_raw(Box::new(FoleyTrajectory(t)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn foley_trajectory_free(traj: *mut FoleyTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Renders a mono clip to stereo along `traj`. A null `room` renders dry.
#[no_mangle]
pub unsafe extern "C" fn foley_render_event(
    mono: *const FoleyClip,
    traj: *const FoleyTrajectory,
    room: *const FoleyRoom,
    out_clip: *mut *mut FoleyClip,
) -> FoleyStatus {
    guard(|| {
        let mono = as_ref(mono, "mono")?;
        let traj = as_ref(traj, "traj")?;
        let slot = out(out_clip, "out_clip")?;
        let spec = match room.as_ref() {
            Some(r) => RoomSpec {
                interaural_m: r.interaural_m,
                ..RoomSpec::custom(r.rt60_s, r.wet_ratio)
            },
            None => RoomSpec::dry(),
        };
        *slot = clip_handle(render_event(&mono.0, &traj.0, &spec)?);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn foley_upmix_51(stereo: *const FoleyClip, out_clip: *mut *mut FoleyClip) -> FoleyStatus {
    guard(|| {
        let stereo = as_ref(stereo, "stereo")?;
        let slot = out(out_clip, "out_clip")?;
        *slot = clip_handle(upmix_51(&stereo.0)?);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn foley_lfe(stereo: *const FoleyClip, out_clip: *mut *mut FoleyClip) -> FoleyStatus {
    guard(|| {
        let stereo = as_ref(stereo, "stereo")?;
        let slot = out(out_clip, "out_clip")?;
        *slot = clip_handle(lfe_channel(&stereo.0)?);
        Ok(())
    })
}

/// Integrated loudness in LUFS; negative infinity for silence.
#[no_mangle]
pub unsafe extern "C" fn foley_loudness(clip: *const FoleyClip, out_lufs: *mut f64) -> FoleyStatus {
    guard(|| {
        let clip = as_ref(clip, "clip")?;
        *out(out_lufs, "out_lufs")? = integrated_loudness(&clip.0, &mut Diagnostics::new())?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn foley_rt60(clip: *const FoleyClip, out_rt60_s: *mut f64) -> FoleyStatus {
    guard(|| {
        let clip = as_ref(clip, "clip")?;
        *out(out_rt60_s, "out_rt60_s")? = schroeder_rt60(&clip.0)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn foley_gcc_phat_azimuth(
    stereo: *const FoleyClip,
    interaural_m: f64,
    out_azimuth_deg: *mut f64,
) -> FoleyStatus {
    guard(|| {
        let stereo = as_ref(stereo, "stereo")?;
        *out(out_azimuth_deg, "out_azimuth_deg")? = gcc_phat_azimuth(&stereo.0, interaural_m)?;
        Ok(())
    })
}

unsafe fn spans<'a>(p: *const FoleySpan, n: usize, what: &'static str) -> Result<&'a [FoleySpan], Fail> {
    if n == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(Fail::Null(what))
    } else {
        Ok(std::slice::from_raw_parts(p, n))
    }
}

#[no_mangle]
pub unsafe extern "C" fn foley_temporal_iou(
    pred: *const FoleySpan,
    pred_len: usize,
    truth: *const FoleySpan,
    truth_len: usize,
    out_iou: *mut f64,
) -> FoleyStatus {
    guard(|| {
        let convert = |s: &[FoleySpan]| -> Result<Vec<EventSpan>, Fail> {
            s.iter()
                .map(|x| {
                    if x.end_s >= x.start_s && x.start_s.is_finite() && x.end_s.is_finite() {
                        Ok(EventSpan::new(x.start_s, x.end_s))
                    } else {
                        Err(Error::Validation("span end precedes its start".into()).into())
                    }
                })
                .collect()
        };
        let p = convert(spans(pred, pred_len, "pred")?)?;
        let t = convert(spans(truth, truth_len, "truth")?)?;
        *out(out_iou, "out_iou")? = temporal_iou(&p, &t);
        Ok(())
    })
}
