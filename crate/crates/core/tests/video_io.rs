use std::path::Path;

use proptest::prelude::*;

use changedet::video_io::{
    load_groundtruth, mask_file_name, read_mask, temporal_median, write_frame, write_groundtruth, write_mask,
};
use changedet::{load_sequence, Error, Frame, FrameSequence, GroundTruthMask, GtCode, LabelMask, TemporalRoi};

fn gray_png(path: &Path, w: u32, h: u32, values: &[u8]) {
    image::GrayImage::from_raw(w, h, values.to_vec()).unwrap().save(path).unwrap();
}

#[test]
fn loads_three_frames_in_numeric_order() {
    let dir = tempfile::tempdir().unwrap();
    // Lexicographic order would put 10 before 9.
    for (n, c) in [(9u32, 10u8), (10, 20), (11, 30)] {
        let f = Frame::filled(4, 3, [c, c, c], n);
        write_frame(&f, &dir.path().join(format!("in{n:06}.png"))).unwrap();
    }
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let frames: Vec<Frame> = load_sequence(dir.path()).unwrap().collect::<Result<_, _>>().unwrap();
    assert_eq!(frames.iter().map(Frame::index).collect::<Vec<_>>(), vec![9, 10, 11]);
    assert_eq!(frames[1].pixel(2, 1), [20, 20, 20]);
    assert_eq!(frames[0].width(), 4);
}

#[test]
fn video_directory_with_input_subfolder() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("input");
    std::fs::create_dir(&input).unwrap();
    write_frame(&Frame::filled(2, 2, [1, 2, 3], 1), &input.join("in000001.jpg")).unwrap();
    let seq = FrameSequence::open(dir.path()).unwrap();
    assert_eq!(seq.len(), 1);
    assert_eq!(seq.root(), input.as_path());
}

#[test]
fn empty_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    match load_sequence(dir.path()) {
        Err(Error::NoFrames(_)) => {}
        Err(e) => panic!("unexpected error {e}"),
        Ok(_) => panic!("empty directory accepted"),
    }
    assert!(matches!(load_sequence(dir.path().join("missing")), Err(Error::MissingDirectory(_))));
}

#[test]
fn dimension_change_names_the_frame() {
    let dir = tempfile::tempdir().unwrap();
    write_frame(&Frame::filled(8, 6, [0, 0, 0], 1), &dir.path().join("in000001.png")).unwrap();
    write_frame(&Frame::filled(8, 5, [0, 0, 0], 2), &dir.path().join("in000002.png")).unwrap();
    let mut frames = load_sequence(dir.path()).unwrap();
    assert!(frames.next().unwrap().is_ok());
    let err = frames.next().unwrap().unwrap_err();
    assert!(matches!(err, Error::FrameDimensions { index: 2, .. }), "{err}");
    assert!(err.to_string().contains("frame 2"), "{err}");
}

#[test]
fn duplicate_frame_numbers_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write_frame(&Frame::filled(2, 2, [0, 0, 0], 3), &dir.path().join("a3.png")).unwrap();
    write_frame(&Frame::filled(2, 2, [0, 0, 0], 3), &dir.path().join("b003.png")).unwrap();
    assert!(matches!(FrameSequence::open(dir.path()), Err(Error::DuplicateFrame { index: 3, .. })));
}

#[test]
fn groundtruth_codes_are_decoded() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gt000001.png");
    gray_png(&path, 5, 1, &[0, 50, 85, 170, 255]);
    let gt = load_groundtruth(&path).unwrap();
    assert_eq!(
        gt.codes(),
        &[GtCode::Static, GtCode::HardShadow, GtCode::OutsideRoi, GtCode::Unknown, GtCode::Motion]
    );
    let again = dir.path().join("copy.png");
    write_groundtruth(&gt, &again).unwrap();
    assert_eq!(load_groundtruth(&again).unwrap(), gt);
}

#[test]
fn groundtruth_value_128_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gt000001.png");
    gray_png(&path, 3, 2, &[0, 0, 0, 0, 128, 255]);
    let err = load_groundtruth(&path).unwrap_err();
    assert!(matches!(err, Error::InvalidGroundTruth { value: 128, x: 1, y: 1, .. }), "{err}");
}

#[test]
fn all_background_mask_writes_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(mask_file_name(7));
    assert!(path.ends_with("bin000007.png"));
    write_mask(&LabelMask::new(6, 4), &path).unwrap();
    let img = image::open(&path).unwrap().into_luma8();
    assert!(img.pixels().all(|p| p.0[0] == 0));
}

#[test]
fn temporal_roi_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("temporalROI.txt");
    std::fs::write(&path, "470 1700\n").unwrap();
    let roi = TemporalRoi::load(&path).unwrap();
    assert!(!roi.contains(469) && roi.contains(470) && roi.contains(1700) && !roi.contains(1701));
    std::fs::write(&path, "12").unwrap();
    assert!(TemporalRoi::load(&path).is_err());
}

#[test]
fn temporal_median_of_even_count_is_lower() {
    let frames: Vec<Frame> = [10u8, 40, 20, 30].iter().map(|&v| Frame::filled(1, 1, [v, 255 - v, v / 2], 0)).collect();
    assert_eq!(temporal_median(&frames).unwrap().pixel(0, 0), [20, 225, 10]);
}

#[test]
fn groundtruth_rejects_wrong_code_count() {
    assert!(GroundTruthMask::new(2, 2, vec![GtCode::Static; 3]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mask_round_trip(w in 1usize..40, h in 1usize..40, seed in any::<u64>()) {
        let mask = LabelMask::from_fn(w, h, |x, y| (seed >> ((x * 7 + y * 3) % 64)) & 1 == 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        write_mask(&mask, &path).unwrap();
        prop_assert_eq!(read_mask(&path).unwrap(), mask);
    }

    #[test]
    fn frame_round_trip(w in 1usize..20, h in 1usize..20, pixels in proptest::collection::vec(any::<[u8; 3]>(), 400)) {
        let f = Frame::from_rgb(w, h, pixels[..w * h].to_vec(), 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.png");
        write_frame(&f, &path).unwrap();
        let back = changedet::video_io::read_frame(&path, 5).unwrap();
        prop_assert_eq!(back.rgb(), f.rgb());
        prop_assert_eq!(back.gray(), f.gray());
    }
}
