import { describe, expect, test } from "vitest";

import { encodePgm, imageDataToGray, imageDataToPgm } from "../src/pgm.js";

describe("encodePgm", () => {
  test("writes the canonical P5 header", () => {
    const out = encodePgm([0, 0.5, 1, 0, 0.25, 0.75], 3, 2);
    const header = new TextDecoder().decode(out.slice(0, out.length - 6));
    expect(header).toBe("P5\n3 2\n255\n");
    expect(out.length).toBe(header.length + 6);
  });

  test("quantizes with round-half-up to match the server", () => {
    // floor(255*v + 0.5)
    const cases: Array<[number, number]> = [
      [0, 0],
      [1, 255],
      [0.5, 128], // 127.5 + 0.5 -> 128
      [127 / 255, 127],
      [0.001, 0], // 0.255 + 0.5 = 0.755 -> 0
      [0.002, 1], // 0.51 + 0.5 = 1.01 -> 1
    ];
    const out = encodePgm(cases.map(([v]) => v), cases.length, 1);
    const data = out.slice(out.length - cases.length);
    cases.forEach(([, want], i) => expect(data[i]).toBe(want));
  });

  test("clamps out-of-range values", () => {
    const out = encodePgm([-0.5, 1.5], 2, 1);
    expect(out[out.length - 2]).toBe(0);
    expect(out[out.length - 1]).toBe(255);
  });

  test("rejects a size mismatch", () => {
    expect(() => encodePgm([1, 2, 3], 2, 2)).toThrow("3 != 2x2");
  });
});

describe("imageDataToGray", () => {
  const rgba = (pixels: Array<[number, number, number]>) => ({
    width: pixels.length,
    height: 1,
    data: pixels.flatMap(([r, g, b]) => [r, g, b, 255]),
  });

  test("applies Rec. 601 luma weights", () => {
    const gray = imageDataToGray(rgba([[255, 0, 0], [0, 255, 0], [0, 0, 255]]));
    expect(gray[0]).toBeCloseTo(0.299, 12);
    expect(gray[1]).toBeCloseTo(0.587, 12);
    expect(gray[2]).toBeCloseTo(0.114, 12);
  });

  test("white is 1 and black is 0", () => {
    const gray = imageDataToGray(rgba([[255, 255, 255], [0, 0, 0]]));
    expect(gray[0]).toBeCloseTo(1, 12);
    expect(gray[1]).toBe(0);
  });

  test("rejects non-RGBA data", () => {
    expect(() => imageDataToGray({ width: 2, height: 1, data: [1, 2, 3] })).toThrow("RGBA");
  });
});

test("imageDataToPgm produces a loadable frame end to end", () => {
  const img = {
    width: 2,
    height: 2,
    data: [255, 255, 255, 255, 0, 0, 0, 255, 128, 128, 128, 255, 255, 0, 0, 255],
  };
  const out = imageDataToPgm(img);
  expect(new TextDecoder().decode(out.slice(0, 9))).toBe("P5\n2 2\n25");
  const data = out.slice(out.length - 4);
  expect(data[0]).toBe(255);
  expect(data[1]).toBe(0);
  expect(data[2]).toBe(128);
  expect(data[3]).toBe(Math.floor(255 * 0.299 + 0.5));
});
