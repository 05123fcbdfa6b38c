mod oracle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use segnoise::morphology::{boundary_band, boundary_iou, dilate, erode, mask_iou, opening};

#[test]
fn erode_dilate_open_match_pixel_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    for k in [2usize, 3, 5, 7] {
        for i in 0..50 {
            let g = oracle::random_grid(&mut rng, 64, 64);
            let m = oracle::from_grid(&g);
            assert_eq!(oracle::to_grid(&erode(&m, k)), oracle::erode(&g, k), "erode k={k} case {i}");
            assert_eq!(oracle::to_grid(&dilate(&m, k)), oracle::dilate(&g, k), "dilate k={k} case {i}");
            assert_eq!(oracle::to_grid(&opening(&m, k)), oracle::opening(&g, k), "open k={k} case {i}");
        }
    }
}

#[test]
fn odd_widths_and_word_boundaries() {
    // Widths around multiples of 64 exercise the packed-word edges.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for w in [1usize, 63, 64, 65, 127, 130] {
        let g = oracle::random_grid(&mut rng, 9, w.max(4)).into_iter().map(|r| r[..w].to_vec()).collect();
        let m = oracle::from_grid(&g);
        for k in [2usize, 3, 4, 9] {
            assert_eq!(oracle::to_grid(&erode(&m, k)), oracle::erode(&g, k), "w={w} k={k}");
            assert_eq!(oracle::to_grid(&dilate(&m, k)), oracle::dilate(&g, k), "w={w} k={k}");
        }
    }
}

#[test]
fn opening_is_idempotent_and_anti_extensive() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let m = oracle::from_grid(&oracle::random_grid(&mut rng, 48, 48));
        let k = rng.random_range(2..8);
        let o = opening(&m, k);
        assert_eq!(opening(&o, k), o);
        assert!(o.and_not(&m).unwrap().is_empty());
        // Erosion shrinks, dilation grows.
        assert!(erode(&m, k).and_not(&m).unwrap().is_empty());
        assert!(m.and_not(&dilate(&m, k)).unwrap().is_empty());
    }
}

#[test]
fn duality_for_odd_kernels() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..30 {
        let g = oracle::random_grid(&mut rng, 40, 40);
        let m = oracle::from_grid(&g);
        for k in [3usize, 5] {
            // Complementing swaps the roles only up to the image border,
            // so compare on the interior.
            let a = erode(&m.complement(), k).complement();
            let b = dilate(&m, k);
            let r = k / 2;
            for y in r..40 - r {
                for x in r..40 - r {
                    assert_eq!(a.get(x, y), b.get(x, y));
                }
            }
        }
    }
}

#[test]
fn iou_and_boundary_iou_match_pixel_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB0);
    for i in 0..50 {
        let a = oracle::random_grid(&mut rng, 64, 64);
        let b = oracle::random_grid(&mut rng, 64, 64);
        let (ma, mb) = (oracle::from_grid(&a), oracle::from_grid(&b));
        assert_eq!(mask_iou(&ma, &mb).unwrap(), oracle::iou(&a, &b), "pair {i}");
        let d = rng.random_range(1..5);
        assert_eq!(oracle::to_grid(&boundary_band(&ma, d)), oracle::band(&a, d));
        assert_eq!(boundary_iou(&ma, &mb, d).unwrap(), oracle::boundary_iou(&a, &b, d), "pair {i} d={d}");
    }
}

#[test]
fn nested_squares_band_iou() {
    let outer = oracle::from_grid(&(0..12).map(|y| (0..12).map(|x| (1..11).contains(&x) && (1..11).contains(&y)).collect()).collect());
    let inner = oracle::from_grid(&(0..12).map(|y| (0..12).map(|x| (2..10).contains(&x) && (2..10).contains(&y)).collect()).collect());
    // Frames of 36 and 28 pixels that share no pixel.
    assert_eq!(boundary_band(&outer, 1).count(), 36);
    assert_eq!(boundary_band(&inner, 1).count(), 28);
    assert_eq!(boundary_iou(&outer, &inner, 1).unwrap(), 0.0);
    let expect = oracle::boundary_iou(&oracle::to_grid(&outer), &oracle::to_grid(&inner), 2);
    assert_eq!(boundary_iou(&outer, &inner, 2).unwrap(), expect);
}
