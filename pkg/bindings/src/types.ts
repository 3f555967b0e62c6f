export interface AssignConfig {
  tDet?: number;
  tRec?: number;
  enableCc?: boolean;
  stage?: "o2m" | "o2o";
  kO2m?: number;
  weights?: [number, number, number];
  lambdaScale?: number;
  reduction?: "sum" | "mean";
  textFallback?: boolean;
  alphabetPath?: string;
}

/**
 * One image worth of predictions as flat buffers. Coordinates are pixels,
 * interleaved x,y; every instance carries 2K boundary points, so the polygon
 * buffer holds 4*K floats per instance.
 */
export interface ImageBatch {
  imageId: string;
  width: number;
  height: number;
  kPoints: number;
  nInstances: number;
  polygons: Float64Array;
  scores: Float64Array;
  transcriptions: string[];
  charConfs: Float64Array[];
  /** optional per-instance row-major slot-by-symbol probabilities */
  charDists?: (Float64Array | null)[];
  /** rows/columns of each charDists entry */
  distShape?: [number, number];
}

export interface BatchHandle {
  teacher: ImageBatch[];
  student: ImageBatch[];
}

export const TIER_DET_ONLY = 0;
export const TIER_E2E = 1;

export interface AssignArrays {
  imageId: string;
  studentIdx: Int32Array;
  teacherIdx: Int32Array;
  /** 0 = det_only, 1 = e2e */
  tier: Uint8Array;
  alpha: Float64Array;
  beta: Float64Array;
  diou: Float64Array;
  disparity: Float64Array;
  costTotal: Float64Array;
  dropped: Int32Array;
}

export interface LossTermsInput {
  lSup: number;
  cls: ArrayLike<number>;
  reg: ArrayLike<number>;
  rec: ArrayLike<number>;
  omegaSup?: number;
  omegaUnsup?: number;
}

export class BoundaryError extends Error {
  readonly field: string;

  constructor(field: string, message: string) {
    super(`${field}: ${message}`);
    this.field = field;
    this.name = "BoundaryError";
  }
}

export class EngineError extends Error {
  readonly exitCode: number;

  constructor(exitCode: number, stderr: string) {
    super(`engine exited with code ${exitCode}: ${stderr.trim()}`);
    this.exitCode = exitCode;
    this.name = "EngineError";
  }
}
