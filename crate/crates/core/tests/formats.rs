use proptest::prelude::*;

use puckergrade::image::{self, GrayImage, ImageError, LoadedImage, RgbImage};
use puckergrade::model_file;
use puckergrade::som::{ClassifyMode, Grade, SomModel};

fn gray(max_side: usize) -> impl Strategy<Value = GrayImage> {
    (1..max_side, 1..max_side).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<u8>(), w * h)
            .prop_map(move |p| GrayImage::new(w, h, p).unwrap())
    })
}

proptest! {
    #[test]
    fn pgm_round_trip(img in gray(40)) {
        let bytes = image::encode_pgm(&img);
        prop_assert_eq!(image::decode_pgm(&bytes).unwrap(), img.clone());
        prop_assert_eq!(image::decode_image(&bytes).unwrap().into_gray(), img);
    }

    #[test]
    fn png_round_trip(img in gray(40)) {
        let bytes = image::encode_png(&img);
        match image::decode_image(&bytes).unwrap() {
            LoadedImage::Gray(back) => prop_assert_eq!(back, img),
            LoadedImage::Rgb(_) => prop_assert!(false, "gray PNG decoded as RGB"),
        }
    }

    #[test]
    fn model_write_read_write(rows in 1usize..5, cols in 1usize..5, dim in 1usize..9, seed in any::<u64>(), dot in any::<bool>(), cfg in proptest::option::of("[ -~\n]{0,40}")) {
        let mut m = SomModel::new(rows, cols, dim, seed).unwrap();
        m.label_nodes(&[(vec![0.2; dim], Grade::new(1).unwrap()), (vec![0.8; dim], Grade::new(4).unwrap())]).unwrap();
        if dot {
            m.set_classify_mode(ClassifyMode::DotProduct);
        }
        let first = model_file::encode(&m, cfg.as_deref());
        let back = model_file::decode(&first).unwrap();
        prop_assert_eq!(&back.model, &m);
        prop_assert_eq!(model_file::encode(&back.model, back.config.as_deref()), first);
    }
}

#[test]
fn rgb_png_converts_with_luma_weights() {
    let rgb = RgbImage::new(3, 1, vec![[255, 0, 0], [0, 255, 0], [10, 20, 30]]).unwrap();
    let g = image::decode_image(&image::encode_png_rgb(&rgb))
        .unwrap()
        .into_gray();
    // (299 r + 587 g + 114 b) / 1000, rounded half up.
    assert_eq!(g.pixels(), &[76, 150, 18]);
}

#[test]
fn pgm_header_variants() {
    let img = image::decode_pgm(b"P5\n# comment\n2 1\n255\n\x01\x02").unwrap();
    assert_eq!(img.pixels(), &[1, 2]);
    let img = image::decode_pgm(b"P5 2 1 255 \x07\x08").unwrap();
    assert_eq!(img.pixels(), &[7, 8]);
    assert!(matches!(
        image::decode_pgm(b"P5\n2 2\n255\n\x01"),
        Err(ImageError::CorruptData(_))
    ));
    assert_eq!(
        image::encode_pgm(&GrayImage::filled(2, 1, 9)),
        b"P5\n2 1\n255\n\x09\x09"
    );
}

#[test]
fn unknown_and_missing_files() {
    assert!(matches!(
        image::decode_image(b"GIF89a...."),
        Err(ImageError::UnsupportedFormat(_))
    ));
    assert!(matches!(
        image::load_image("/definitely/not/here.png"),
        Err(ImageError::FileNotFound(_))
    ));
}
