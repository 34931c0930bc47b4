/**
 * Delay invoking `fn` until `delay` ms have passed since the last call.
 * The returned function carries a `cancel` method for pending invocations.
 */
export function debounce<T extends (...args: Parameters<T>) => void>(
  fn: T,
  delay = 300
): T & { cancel: () => void } {
  let timer: ReturnType<typeof setTimeout> | null = null;

  const debounced = ((...args: Parameters<T>) => {
    if (timer) clearTimeout(timer);
    timer = setTimeout(() => {
      timer = null;
      fn(...args);
    }, delay);
  }) as T & { cancel: () => void };

  debounced.cancel = () => {
    if (timer) {
      clearTimeout(timer);
      timer = null;
    }
  };

  return debounced;
}
