use std::path::Path;
use std::process::Command;

use emrestore::codec;
use emrestore::container::{read_model_file, write_model_file, Model, ModelFile};
use emrestore::io::{read_raw_f32, write_raw_f32};
use emrestore::{AutoencoderParams, AutoencoderPlan, Image, KernelModel, Modality};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn emrestore(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_emrestore"))
        .args(args)
        .output()
        .expect("binary runs");
    eprint!("{}", String::from_utf8_lossy(&out.stderr));
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ramp(h: usize, w: usize) -> Image {
    Image::from_fn(h, w, |r, c| ((r * 7 + c * 3) % 11) as f64 + 0.25 * r as f64)
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(emrestore(&[]).0, 2);
    assert_eq!(emrestore(&["denoise", "--model", "tem-k3"]).0, 2);
    assert_eq!(emrestore(&["frobnicate"]).0, 2);
    assert_eq!(emrestore(&["--help"]).0, 0);
}

#[test]
fn missing_input_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = emrestore(&[
        "denoise",
        "--model",
        "tem-k3",
        "--in",
        s(&dir.path().join("absent.pgm")),
        "--out",
        s(&dir.path().join("o.pgm")),
    ]);
    assert_eq!(code, 3);
}

#[test]
fn malformed_files_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pgm");
    std::fs::write(&bad, b"P2 3 3 255\n").unwrap();
    let out = dir.path().join("o.pgm");
    assert_eq!(emrestore(&["denoise", "--model", "tem-k3", "--in", s(&bad), "--out", s(&out)]).0, 4);

    let junk = dir.path().join("junk.emnn");
    std::fs::write(&junk, b"EMNX\x01\x00").unwrap();
    let img = dir.path().join("a.pgm");
    emrestore::io::write_image(&img, &ramp(8, 8)).unwrap();
    assert_eq!(emrestore(&["denoise", "--model", s(&junk), "--in", s(&img), "--out", s(&out)]).0, 4);
}

#[test]
fn constant_image_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("flat.f32");
    write_raw_f32(&img, &Image::filled(6, 6, 2.0)).unwrap();
    let (code, _) = emrestore(&[
        "denoise", "--model", "stem-k5", "--in", s(&img), "--out", s(&dir.path().join("o.f32")),
        "--width", "6", "--height", "6",
    ]);
    assert_eq!(code, 5);
}

#[test]
fn kernels_list_and_export() {
    let (code, text) = emrestore(&["kernels", "--modality", "stem"]);
    assert_eq!(code, 0);
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().any(|l| l.starts_with("stem-k5")));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k.emnn");
    let (code, _) = emrestore(&["kernels", "--modality", "stem", "--size", "5", "--out", s(&out)]);
    assert_eq!(code, 0);
    let file = read_model_file(&out).unwrap();
    assert_eq!(file.modality, Modality::Stem);
    match file.model {
        Model::Kernel(k) => {
            assert_eq!(k.size(), 5);
            assert_eq!(k.weights()[12], 0.089f32 as f64);
        }
        _ => panic!("exported model is not a kernel"),
    }
}

#[test]
fn identity_kernel_denoise_returns_input() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("id.emnn");
    write_model_file(
        &model,
        &ModelFile {
            modality: Modality::Tem,
            model: Model::Kernel(KernelModel::identity(3).unwrap()),
        },
    )
    .unwrap();
    let img = ramp(9, 13);
    let input = dir.path().join("in.f32");
    write_raw_f32(&input, &img).unwrap();
    let output = dir.path().join("out.f32");
    let (code, _) = emrestore(&[
        "denoise", "--model", s(&model), "--in", s(&input), "--out", s(&output), "--width", "13", "--height", "9",
    ]);
    assert_eq!(code, 0);
    let back = read_raw_f32(&output, 13, 9).unwrap();
    for (a, b) in back.data().iter().zip(img.data()) {
        assert!((a - b).abs() < 1e-5, "{a} vs {b}");
    }
}

#[test]
fn published_kernel_keeps_shape() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pgm");
    emrestore::io::write_image(&input, &ramp(17, 23)).unwrap();
    let output = dir.path().join("out.pgm");
    let (code, _) = emrestore(&["denoise", "--model", "temstem-k7", "--in", s(&input), "--out", s(&output)]);
    assert_eq!(code, 0);
    let out = emrestore::io::read_image(&output, None).unwrap();
    assert_eq!((out.height(), out.width()), (17, 23));
}

#[test]
fn compress_then_decompress_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let plan = AutoencoderPlan {
        crop_size: 16,
        channels: [2, 2, 2],
        latent_depth: 2,
    };
    let mut params = AutoencoderParams::init(plan, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    params.prime_batchnorm();
    let model = dir.path().join("ae.emnn");
    let file = ModelFile {
        modality: Modality::Tem,
        model: Model::Autoencoder(params),
    };
    write_model_file(&model, &file).unwrap();
    let params = match read_model_file(&model).unwrap().model {
        Model::Autoencoder(p) => p,
        _ => unreachable!(),
    };

    let img = ramp(21, 35);
    let input = dir.path().join("in.f32");
    write_raw_f32(&input, &img).unwrap();
    let packed = dir.path().join("in.emlc");
    let (code, _) = emrestore(&[
        "compress", "--model", s(&model), "--in", s(&input), "--out", s(&packed), "--width", "35", "--height", "21",
    ]);
    assert_eq!(code, 0);
    let container = codec::deserialize(&std::fs::read(&packed).unwrap()).unwrap();
    assert_eq!((container.orig_height, container.orig_width), (21, 35));
    assert_eq!((container.grid_rows, container.grid_cols), (2, 3));

    let output = dir.path().join("out.f32");
    let (code, _) = emrestore(&["decompress", "--model", s(&model), "--in", s(&packed), "--out", s(&output)]);
    assert_eq!(code, 0);
    let ours = read_raw_f32(&output, 35, 21).unwrap();
    let expected = codec::decompress(&params, &container).unwrap();
    for (a, b) in ours.data().iter().zip(expected.data()) {
        assert_eq!(*a, *b as f32 as f64);
    }

    // A kernel file is not an autoencoder.
    let k = dir.path().join("k.emnn");
    emrestore(&["kernels", "--modality", "tem", "--size", "3", "--out", s(&k)]);
    let (code, _) = emrestore(&["decompress", "--model", s(&k), "--in", s(&packed), "--out", s(&output)]);
    assert_eq!(code, 2);
}
