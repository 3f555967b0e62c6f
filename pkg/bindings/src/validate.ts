import { BatchHandle, BoundaryError, ImageBatch } from "./types.js";

function checkFinite(values: ArrayLike<number>, field: string): void {
  for (let i = 0; i < values.length; i++) {
    if (!Number.isFinite(values[i])) {
      throw new BoundaryError(field, `non-finite value at index ${i}`);
    }
  }
}

function checkRange01(values: ArrayLike<number>, field: string): void {
  for (let i = 0; i < values.length; i++) {
    const v = values[i];
    if (!(v >= 0 && v <= 1)) {
      throw new BoundaryError(field, `value ${v} at index ${i} outside [0, 1]`);
    }
  }
}

export function validateImageBatch(batch: ImageBatch, side: string, image: number): void {
  const where = `${side}[${image}]`;
  if (!Number.isInteger(batch.width) || batch.width <= 0) {
    throw new BoundaryError(`${where}.width`, "must be a positive integer");
  }
  if (!Number.isInteger(batch.height) || batch.height <= 0) {
    throw new BoundaryError(`${where}.height`, "must be a positive integer");
  }
  if (!Number.isInteger(batch.kPoints) || batch.kPoints < 2) {
    throw new BoundaryError(`${where}.kPoints`, "needs at least 2 boundary pairs");
  }
  if (!Number.isInteger(batch.nInstances) || batch.nInstances < 0) {
    throw new BoundaryError(`${where}.nInstances`, "must be a non-negative integer");
  }
  const n = batch.nInstances;
  const expected = n * 4 * batch.kPoints;
  if (batch.polygons.length !== expected) {
    throw new BoundaryError(
      `${where}.polygons`,
      `buffer length ${batch.polygons.length} != 4*K*nInstances = ${expected}`
    );
  }
  checkFinite(batch.polygons, `${where}.polygons`);
  if (batch.scores.length !== n) {
    throw new BoundaryError(`${where}.scores`, `length ${batch.scores.length} != ${n}`);
  }
  checkRange01(batch.scores, `${where}.scores`);
  if (batch.transcriptions.length !== n) {
    throw new BoundaryError(
      `${where}.transcriptions`,
      `length ${batch.transcriptions.length} != ${n}`
    );
  }
  if (batch.charConfs.length !== n) {
    throw new BoundaryError(`${where}.charConfs`, `length ${batch.charConfs.length} != ${n}`);
  }
  for (let i = 0; i < n; i++) {
    const conf = batch.charConfs[i];
    if (conf.length !== batch.transcriptions[i].length) {
      throw new BoundaryError(
        `${where}.charConfs[${i}]`,
        `length ${conf.length} != transcription length ${batch.transcriptions[i].length}`
      );
    }
    checkRange01(conf, `${where}.charConfs[${i}]`);
  }
  if (batch.charDists != null) {
    if (batch.charDists.length !== n) {
      throw new BoundaryError(`${where}.charDists`, `length ${batch.charDists.length} != ${n}`);
    }
    const shape = batch.distShape;
    if (!shape) {
      throw new BoundaryError(`${where}.distShape`, "required when charDists is present");
    }
    const [rows, cols] = shape;
    for (let i = 0; i < n; i++) {
      const dist = batch.charDists[i];
      if (dist == null) continue;
      if (dist.length !== rows * cols) {
        throw new BoundaryError(
          `${where}.charDists[${i}]`,
          `buffer length ${dist.length} != rows*cols = ${rows * cols}`
        );
      }
      checkFinite(dist, `${where}.charDists[${i}]`);
    }
  }
}

export function validateBatch(handle: BatchHandle): void {
  if (handle.teacher.length !== handle.student.length) {
    throw new BoundaryError(
      "teacher/student",
      `image counts differ: ${handle.teacher.length} vs ${handle.student.length}`
    );
  }
  handle.teacher.forEach((img, i) => validateImageBatch(img, "teacher", i));
  handle.student.forEach((img, i) => validateImageBatch(img, "student", i));
  for (let i = 0; i < handle.teacher.length; i++) {
    if (handle.teacher[i].imageId !== handle.student[i].imageId) {
      throw new BoundaryError(
        `teacher[${i}].imageId`,
        `id ${handle.teacher[i].imageId} != student id ${handle.student[i].imageId}`
      );
    }
  }
}
