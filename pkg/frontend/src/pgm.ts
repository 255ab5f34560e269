/** Client-side image conversion: anything the browser can decode -> binary
 * PGM, the one image format the gesture endpoint accepts.
 */

/** Encode a grayscale image (values in [0, 1], row-major) as binary 8-bit
 * PGM. Quantization matches the server: v -> floor(255*v + 0.5), clamped.
 */
export function encodePgm(gray: ArrayLike<number>, width: number, height: number): Uint8Array {
  if (width <= 0 || height <= 0 || gray.length !== width * height) {
    throw new Error(`gray length ${gray.length} != ${width}x${height}`);
  }
  const header = `P5\n${width} ${height}\n255\n`;
  const head = new TextEncoder().encode(header);
  const out = new Uint8Array(head.length + width * height);
  out.set(head, 0);
  for (let i = 0; i < gray.length; i++) {
    const v = Math.min(1, Math.max(0, gray[i]));
    out[head.length + i] = Math.floor(255 * v + 0.5);
  }
  return out;
}

/** RGBA pixel block (canvas ImageData shape) -> [0, 1] grayscale via the
 * Rec. 601 luma weights.
 */
export function imageDataToGray(img: {
  width: number;
  height: number;
  data: ArrayLike<number>;
}): Float64Array {
  const n = img.width * img.height;
  if (img.data.length !== 4 * n) {
    throw new Error(`expected RGBA data of length ${4 * n}, got ${img.data.length}`);
  }
  const gray = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    const r = img.data[4 * i];
    const g = img.data[4 * i + 1];
    const b = img.data[4 * i + 2];
    gray[i] = (0.299 * r + 0.587 * g + 0.114 * b) / 255;
  }
  return gray;
}

export function imageDataToPgm(img: {
  width: number;
  height: number;
  data: ArrayLike<number>;
}): Uint8Array {
  return encodePgm(imageDataToGray(img), img.width, img.height);
}

/** Decode a dropped image file (PNG, JPEG, ...) in the browser and convert
 * it to PGM. Needs canvas support, so it is exercised manually rather than
 * under jsdom; the pure converters above carry the tested logic.
 */
export async function fileToPgm(file: Blob): Promise<Uint8Array> {
  const bitmap = await createImageBitmap(file);
  const canvas = document.createElement("canvas");
  canvas.width = bitmap.width;
  canvas.height = bitmap.height;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("2d canvas unavailable");
  ctx.drawImage(bitmap, 0, 0);
  const data = ctx.getImageData(0, 0, bitmap.width, bitmap.height);
  return imageDataToPgm(data);
}
