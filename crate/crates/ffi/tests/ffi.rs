use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use foley_ffi::*;

fn noise(n: usize) -> Vec<f32> {
    let mut s: u32 = 7;
    (0..n)
        .map(|_| {
            s = s.wrapping_mul(1_103_515_245).wrapping_add(12_345);
            ((s >> 8) & 0xffff) as f32 / 65_535.0 - 0.5
        })
        .collect()
}

fn last_error() -> String {
    let p = foley_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn new_clip(sr: u32, ch: usize, data: &[f32]) -> *mut FoleyClip {
    let mut clip = ptr::null_mut();
    assert_eq!(
        foley_clip_new(sr, ch, data.as_ptr(), data.len(), &mut clip),
        FoleyStatus::Ok
    );
    clip
}

#[test]
fn itd_and_pan() {
    assert!((foley_itd_of(180.0, 0.17) * 1e6 - 495.6).abs() < 0.5);
    assert_eq!(foley_itd_of(90.0, 0.17), 0.0);
    let (mut l, mut r) = (0.0, 0.0);
    assert_eq!(
        unsafe { foley_pan_gains(90.0, 1.0, 1.0, &mut l, &mut r) },
        FoleyStatus::Ok
    );
    assert!((l * l + r * r - 1.0).abs() < 1e-12);
    assert_eq!(
        unsafe { foley_pan_gains(90.0, 0.0, 1.0, &mut l, &mut r) },
        FoleyStatus::InvalidArgument
    );
}

#[test]
fn render_and_measure() {
    unsafe {
        let mono = new_clip(48_000, 1, &noise(48_000));
        let mut traj = ptr::null_mut();
        assert_eq!(
            foley_trajectory_constant(25.0, 25, 45.0, 1.0, &mut traj),
            FoleyStatus::Ok
        );
        let mut stereo = ptr::null_mut();
        assert_eq!(
            foley_render_event(mono, traj, ptr::null(), &mut stereo),
            FoleyStatus::Ok
        );
        assert_eq!(foley_clip_channels(stereo), 2);
        assert_eq!(foley_clip_frames(stereo), 48_000);
        let mut az = 0.0;
        assert_eq!(foley_gcc_phat_azimuth(stereo, 0.17, &mut az), FoleyStatus::Ok);
        assert!((az - 45.0).abs() < 5.0, "{az}");

        let mut lufs = 0.0;
        assert_eq!(foley_loudness(stereo, &mut lufs), FoleyStatus::Ok);
        assert!(lufs.is_finite());

        let mut lfe = ptr::null_mut();
        assert_eq!(foley_lfe(stereo, &mut lfe), FoleyStatus::Ok);
        assert_eq!(foley_clip_channels(lfe), 1);

        let mut len = 0usize;
        assert_eq!(
            foley_clip_copy_samples(stereo, ptr::null_mut(), 0, &mut len),
            FoleyStatus::Ok
        );
        assert_eq!(len, 96_000);
        let mut buf = vec![0f32; 10];
        assert_eq!(
            foley_clip_copy_samples(stereo, buf.as_mut_ptr(), buf.len(), &mut len),
            FoleyStatus::Ok
        );
        assert!(buf.iter().any(|&v| v != 0.0));

        // Stereo-only operations reject mono input.
        let mut bad = ptr::null_mut();
        assert_eq!(foley_upmix_51(mono, &mut bad), FoleyStatus::InvalidArgument);
        assert!(bad.is_null());
        assert!(last_error().contains("stereo"));

        for c in [mono, stereo, lfe] {
            foley_clip_free(c);
        }
        foley_trajectory_free(traj);
    }
}

#[test]
fn wav_round_trip_and_rt60() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("d.wav").to_str().unwrap()).unwrap();
    let decay: Vec<f32> = noise(48_000)
        .iter()
        .enumerate()
        .map(|(i, v)| v * (-6.91 * i as f32 / 48_000.0 / 0.4).exp())
        .collect();
    unsafe {
        let clip = new_clip(48_000, 1, &decay);
        assert_eq!(
            foley_clip_save(clip, path.as_ptr(), FoleyEncoding::Float32),
            FoleyStatus::Ok
        );
        let mut back = ptr::null_mut();
        assert_eq!(foley_clip_load(path.as_ptr(), &mut back), FoleyStatus::Ok);
        assert_eq!(foley_clip_sample_rate(back), 48_000);
        let mut rt = 0.0;
        assert_eq!(foley_rt60(back, &mut rt), FoleyStatus::Ok);
        assert!((rt - 0.4).abs() < 0.04, "{rt}");
        foley_clip_free(clip);
        foley_clip_free(back);
    }
}

#[test]
fn errors_and_null_handles() {
    unsafe {
        let mut clip = ptr::null_mut();
        let missing = CString::new("/nonexistent/dir/x.wav").unwrap();
        assert_eq!(foley_clip_load(missing.as_ptr(), &mut clip), FoleyStatus::Io);
        assert!(last_error().contains("x.wav"));
        assert_eq!(foley_clip_load(ptr::null(), &mut clip), FoleyStatus::NullPointer);
        assert_eq!(
            foley_clip_new(48_000, 3, [0.0f32; 3].as_ptr(), 3, &mut clip),
            FoleyStatus::InvalidArgument
        );
        let mut v = 0.0;
        assert_eq!(foley_loudness(ptr::null(), &mut v), FoleyStatus::NullPointer);
        assert_eq!(foley_clip_frames(ptr::null()), 0);
        foley_clip_free(ptr::null_mut());
        foley_trajectory_free(ptr::null_mut());

        let silent = new_clip(48_000, 2, &[0.0; 9600]);
        assert_eq!(foley_gcc_phat_azimuth(silent, 0.17, &mut v), FoleyStatus::Estimation);
        foley_clip_free(silent);
        // A successful call clears the message.
        assert_eq!(
            foley_azimuth_from_cue(320.0, 640.0, 360.0, 2.0, 160.0, &mut v),
            FoleyStatus::Ok
        );
        assert_eq!(v, 90.0);
        assert!(foley_last_error().is_null());
    }
}

#[test]
fn iou_worked_example() {
    let pred = [
        FoleySpan {
            start_s: 1.0,
            end_s: 2.0,
        },
        FoleySpan {
            start_s: 4.0,
            end_s: 5.0,
        },
    ];
    let truth = [
        FoleySpan {
            start_s: 1.5,
            end_s: 2.5,
        },
        FoleySpan {
            start_s: 4.0,
            end_s: 5.0,
        },
    ];
    let mut iou = 0.0;
    let st = unsafe { foley_temporal_iou(pred.as_ptr(), 2, truth.as_ptr(), 2, &mut iou) };
    assert_eq!(st, FoleyStatus::Ok);
    assert!((iou - 0.6).abs() < 1e-12);
    let st = unsafe { foley_temporal_iou(ptr::null(), 0, ptr::null(), 0, &mut iou) };
    assert_eq!((st, iou), (FoleyStatus::Ok, 1.0));
    let bad = [FoleySpan {
        start_s: 2.0,
        end_s: 1.0,
    }];
    let st = unsafe { foley_temporal_iou(bad.as_ptr(), 1, ptr::null(), 0, &mut iou) };
    assert_eq!(st, FoleyStatus::InvalidArgument);
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(foley_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Compiles the C smoke program against the generated header and the
/// static library.
#[test]
fn c_program_links_and_runs() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler; skipped");
        return;
    };
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/ffi-xxxx -> target/<profile>
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("libfoley_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(cc)
        .arg(crate_dir.join("tests/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| {
            Command::new(c)
                .arg("--version")
                .output()
                .is_ok_and(|o| o.status.success())
        })
        .ok_or(())
}
