use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use nnms_ffi::*;

fn builtin(name: &str) -> *mut NnmsCode {
    let name = CString::new(name).unwrap();
    let mut code = ptr::null_mut();
    assert_eq!(
        unsafe { nnms_code_builtin(name.as_ptr(), &mut code) },
        NnmsStatus::Ok
    );
    assert!(!code.is_null());
    code
}

fn last_error() -> String {
    let p = nnms_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn builtin_code_dimensions() {
    let code = builtin("reg96");
    unsafe {
        assert_eq!(nnms_code_n(code), 96);
        assert_eq!(nnms_code_m(code), 48);
        assert_eq!(nnms_code_k(code), 48);
        assert_eq!(nnms_code_edges(code), 288);
        let mut s2 = 0.0;
        assert_eq!(nnms_snr_to_sigma2(code, 0.0, &mut s2), NnmsStatus::Ok);
        assert!((s2 - 1.0).abs() < 1e-12);
        nnms_code_free(code);
        assert_eq!(nnms_code_n(ptr::null()), 0);
        nnms_code_free(ptr::null_mut());
    }
}

#[test]
fn alist_text_with_k_override() {
    let text = CString::new("3 2\n2 2\n1 2 1\n2 2\n1 0\n1 2\n2 0\n1 2\n2 3\n").unwrap();
    let mut code = ptr::null_mut();
    unsafe {
        assert_eq!(
            nnms_code_from_alist(text.as_ptr(), 0, &mut code),
            NnmsStatus::Ok
        );
        assert_eq!((nnms_code_n(code), nnms_code_k(code)), (3, 1));
        nnms_code_free(code);
        assert_eq!(
            nnms_code_from_alist(text.as_ptr(), 2, &mut code),
            NnmsStatus::Ok
        );
        assert_eq!(nnms_code_k(code), 2);
        nnms_code_free(code);
    }
}

#[test]
fn errors_carry_status_and_message() {
    let mut code = ptr::null_mut();
    unsafe {
        let bad = CString::new("not an alist").unwrap();
        assert_eq!(
            nnms_code_from_alist(bad.as_ptr(), 0, &mut code),
            NnmsStatus::Parse
        );
        assert!(code.is_null());
        assert!(last_error().contains("alist"));

        let missing = CString::new("/definitely/not/here.alist").unwrap();
        assert_eq!(
            nnms_code_from_file(missing.as_ptr(), &mut code),
            NnmsStatus::Io
        );

        assert_eq!(
            nnms_code_builtin(ptr::null(), &mut code),
            NnmsStatus::NullPointer
        );
        let name = CString::new("reg96").unwrap();
        assert_eq!(
            nnms_code_builtin(name.as_ptr(), ptr::null_mut()),
            NnmsStatus::NullPointer
        );

        let unknown = CString::new("nope").unwrap();
        assert_eq!(
            nnms_code_builtin(unknown.as_ptr(), &mut code),
            NnmsStatus::InvalidArgument
        );
        assert!(last_error().contains("nope"));

        let invalid_utf8 = [0xffu8, 0xfe, 0];
        assert_eq!(
            nnms_code_builtin(invalid_utf8.as_ptr().cast(), &mut code),
            NnmsStatus::Utf8
        );
    }
    let s = unsafe { CStr::from_ptr(nnms_status_string(NnmsStatus::LengthMismatch)) };
    assert_eq!(s.to_str().unwrap(), "length mismatch");
    assert!(!unsafe { CStr::from_ptr(nnms_version()) }
        .to_bytes()
        .is_empty());
}

#[test]
fn decode_a_noisy_frame() {
    let code = builtin("reg96");
    let scheme = CString::new("nms:0.75").unwrap();
    let mut dec = ptr::null_mut();
    unsafe {
        assert_eq!(
            nnms_decoder_new(code, scheme.as_ptr(), 20, &mut dec),
            NnmsStatus::Ok
        );
        assert_eq!(nnms_decoder_t_max(dec), 20);
        // all-zeros codeword with a few weak or flipped positions
        let mut llrs = vec![3.0; 96];
        llrs[5] = -1.0;
        llrs[40] = -0.5;
        llrs[77] = 0.2;
        let mut hard = vec![9u8; 96];
        let mut soft = vec![0.0; 96];
        let (mut iters, mut converged) = (0usize, false);
        let st = nnms_decoder_decode(
            dec,
            llrs.as_ptr(),
            96,
            hard.as_mut_ptr(),
            soft.as_mut_ptr(),
            &mut iters,
            &mut converged,
        );
        assert_eq!(st, NnmsStatus::Ok);
        assert!(hard.iter().all(|&b| b == 0));
        assert!(soft.iter().all(|&x| x > 0.0));
        assert!(converged);
        assert!((1..=20).contains(&iters));

        // optional outputs may be null
        let st = nnms_decoder_decode(
            dec,
            llrs.as_ptr(),
            96,
            hard.as_mut_ptr(),
            ptr::null_mut(),
            ptr::null_mut(),
            ptr::null_mut(),
        );
        assert_eq!(st, NnmsStatus::Ok);

        let st = nnms_decoder_decode(
            dec,
            llrs.as_ptr(),
            95,
            hard.as_mut_ptr(),
            ptr::null_mut(),
            ptr::null_mut(),
            ptr::null_mut(),
        );
        assert_eq!(st, NnmsStatus::LengthMismatch);
        let st = nnms_decoder_decode(
            dec,
            llrs.as_ptr(),
            96,
            ptr::null_mut(),
            ptr::null_mut(),
            ptr::null_mut(),
            ptr::null_mut(),
        );
        assert_eq!(st, NnmsStatus::NullPointer);

        llrs[0] = f64::NAN;
        let st = nnms_decoder_decode(
            dec,
            llrs.as_ptr(),
            96,
            hard.as_mut_ptr(),
            ptr::null_mut(),
            ptr::null_mut(),
            ptr::null_mut(),
        );
        assert_eq!(st, NnmsStatus::Divergence);

        nnms_decoder_free(dec);
        nnms_code_free(code);
    }
}

#[test]
fn early_exit_toggle() {
    let code = builtin("reg96");
    let scheme = CString::new("ms").unwrap();
    let mut dec = ptr::null_mut();
    unsafe {
        assert_eq!(
            nnms_decoder_new(code, scheme.as_ptr(), 7, &mut dec),
            NnmsStatus::Ok
        );
        assert_eq!(nnms_decoder_set_early_exit(dec, false), NnmsStatus::Ok);
        let llrs = vec![4.0; 96];
        let mut hard = vec![0u8; 96];
        let mut iters = 0usize;
        let st = nnms_decoder_decode(
            dec,
            llrs.as_ptr(),
            96,
            hard.as_mut_ptr(),
            ptr::null_mut(),
            &mut iters,
            ptr::null_mut(),
        );
        assert_eq!(st, NnmsStatus::Ok);
        assert_eq!(iters, 7);
        assert_eq!(
            nnms_decoder_set_early_exit(ptr::null_mut(), true),
            NnmsStatus::NullPointer
        );
        nnms_decoder_free(dec);
        nnms_code_free(code);
    }
}

#[test]
fn bad_scheme_and_weight_files() {
    let code = builtin("reg96");
    let mut dec = ptr::null_mut();
    unsafe {
        let bad = CString::new("fancy").unwrap();
        assert_eq!(
            nnms_decoder_new(code, bad.as_ptr(), 5, &mut dec),
            NnmsStatus::InvalidArgument
        );
        let ms = CString::new("ms").unwrap();
        assert_eq!(
            nnms_decoder_new(code, ms.as_ptr(), 0, &mut dec),
            NnmsStatus::InvalidArgument
        );

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.json");
        std::fs::write(&path, r#"{"scheme":"snnms","t_max":3,"raw":[0.1,0.2]}"#).unwrap();
        let cpath = CString::new(path.to_str().unwrap()).unwrap();
        assert_eq!(
            nnms_decoder_from_weights(code, cpath.as_ptr(), &mut dec),
            NnmsStatus::Weights
        );

        std::fs::write(
            &path,
            r#"{"scheme":"snnms","t_max":3,"raw":[0.1,0.2,-1.0]}"#,
        )
        .unwrap();
        assert_eq!(
            nnms_decoder_from_weights(code, cpath.as_ptr(), &mut dec),
            NnmsStatus::Ok
        );
        assert_eq!(nnms_decoder_t_max(dec), 3);
        nnms_decoder_free(dec);
        nnms_code_free(code);
    }
}

/// The generated header must compile as both C and C++.
#[test]
fn header_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/nnms.h");
    assert!(
        header.exists(),
        "build script did not write {}",
        header.display()
    );
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{}\"\nint main(void) {{ NnmsCode *c = 0; return (int)nnms_code_builtin(\"reg96\", &c); }}\n",
            header.display()
        ),
    )
    .unwrap();
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        match Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(&src)
            .output()
        {
            Ok(out) => assert!(
                out.status.success(),
                "{compiler}: {}",
                String::from_utf8_lossy(&out.stderr)
            ),
            Err(_) => eprintln!("{compiler} not found; header compile check skipped"),
        }
    }
}
