/**
 * Minimal ambient types for the optional model backend. The package is an
 * optionalDependency (large native binaries), so its own declarations may be
 * absent at build time; it is only ever loaded through a dynamic import.
 */
declare module "@xenova/transformers" {
  export function pipeline(
    task: string,
    model?: string,
    options?: Record<string, unknown>,
  ): Promise<(input: string, options?: Record<string, unknown>) => Promise<unknown>>;
}
